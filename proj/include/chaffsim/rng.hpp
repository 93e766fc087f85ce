#ifndef CHAFFSIM_RNG_HPP
#define CHAFFSIM_RNG_HPP

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace chaffsim {

// splitmix64 finalizer; used to derive independent per-stream seeds.
inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Seeded generator with portable draw helpers. All sampling in the library
// goes through this class so runs are reproducible bit-for-bit under a seed.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    double uniform() {  // [0, 1)
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    // uniform integer in [0, n)
    std::uint64_t uniform_int(std::uint64_t n) {
        // bitmask rejection; unbiased
        std::uint64_t mask = ~0ULL;
        if (n <= 1) return 0;
        std::uint64_t range = n - 1;
        mask >>= __builtin_clzll(range | 1);
        std::uint64_t v;
        do {
            v = gen_() & mask;
        } while (v > range);
        return v;
    }

    // index drawn from a (sub)probability vector by inverse CDF;
    // residual rounding mass goes to the last positive entry
    int sample(std::span<const double> probs) {
        double u = uniform();
        double acc = 0.0;
        int last_positive = 0;
        for (int i = 0; i < static_cast<int>(probs.size()); ++i) {
            if (probs[i] > 0.0) last_positive = i;
            acc += probs[i];
            if (u < acc) return i;
        }
        return last_positive;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (std::size_t i = v.size(); i > 1; --i) {
            std::size_t j = uniform_int(i);
            std::swap(v[i - 1], v[j]);
        }
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace chaffsim

#endif

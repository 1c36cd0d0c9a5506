#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace fsdlab {

// All randomness in the library flows through this wrapper so splits,
// corpus generation and training are reproducible from integer seeds
// alone. The shuffle below is the declared algorithm for dataset splits:
// descending Fisher-Yates with modulo-bounded mt19937_64 draws.
class Rng {
public:
    explicit Rng(uint64_t seed) : engine_(seed) {}

    uint64_t next() { return engine_(); }

    // Bounded draw in [0, n). Modulo bias is negligible for the sizes used
    // here and keeps the sequence trivially re-derivable in other languages.
    uint64_t bounded(uint64_t n) { return engine_() % n; }

    // Uniform double in [0, 1).
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    // Standard normal via Box-Muller (one value per call, cached pair).
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 0.0;
        while (u1 == 0.0) u1 = uniform();
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(6.283185307179586477 * u2);
        have_spare_ = true;
        return r * std::cos(6.283185307179586477 * u2);
    }

private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

template <typename T>
void shuffle(std::vector<T>& items, Rng& rng) {
    for (size_t i = items.size(); i > 1; --i) {
        size_t j = static_cast<size_t>(rng.bounded(i));
        std::swap(items[i - 1], items[j]);
    }
}

} // namespace fsdlab

#ifndef MATSAMPLE_ROW_RNG_HPP
#define MATSAMPLE_ROW_RNG_HPP

#include <cstdint>
#include <limits>

namespace matsample {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Independent random stream for one sampled row. The stream depends only on
// (seed, epoch, layer, batch, row), never on how rows are stacked or which
// process samples them, so bulk and distributed runs draw identical numbers.
class RowRng {
public:
    using result_type = std::uint64_t;

    RowRng(std::uint64_t seed, std::uint64_t epoch, std::uint64_t layer,
           std::uint64_t batch, std::uint64_t row)
        : state_(derive(seed, epoch, layer, batch, row)) {}

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() {
        state_ += 0x9e3779b97f4a7c15ULL;
        return mix64(state_);
    }

    // Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    static constexpr std::uint64_t derive(std::uint64_t seed, std::uint64_t epoch,
                                          std::uint64_t layer, std::uint64_t batch,
                                          std::uint64_t row) {
        std::uint64_t h = mix64(seed + 0x9e3779b97f4a7c15ULL);
        h = mix64(h ^ (epoch + 0x632be59bd9b4e019ULL));
        h = mix64(h ^ (layer + 0x85157af5ULL));
        h = mix64(h ^ (batch + 0xd6e8feb86659fd93ULL));
        h = mix64(h ^ (row + 0xa0761d6478bd642fULL));
        return h;
    }

    std::uint64_t state_;
};

}  // namespace matsample

#endif  // MATSAMPLE_ROW_RNG_HPP

#ifndef MFAC_RNG_HPP
#define MFAC_RNG_HPP

#include <cstdint>
#include <initializer_list>
#include <random>

#include <Eigen/Dense>

namespace mfac {

// Seeded stream splitting: every consumer of randomness derives its own
// stream from (master seed, path of indices), so results do not depend on
// evaluation order or thread count.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

class RngStream {
  public:
    explicit RngStream(std::uint64_t master,
                       std::initializer_list<std::uint64_t> path = {}) {
        std::uint64_t s = splitmix64(master);
        for (std::uint64_t p : path) s = splitmix64(s ^ splitmix64(p));
        eng_.seed(s);
    }

    double normal() { return normal_(eng_); }
    double uniform() { return uniform_(eng_); }

    Eigen::VectorXd normal_vec(int n) {
        Eigen::VectorXd v(n);
        for (int i = 0; i < n; ++i) v(i) = normal();
        return v;
    }

    std::mt19937_64& engine() { return eng_; }

  private:
    friend class RngTree;
    std::mt19937_64 eng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
};

// Keyed factory for streams; cheap to copy around.
class RngTree {
  public:
    explicit RngTree(std::uint64_t master) : master_(splitmix64(master)) {}

    RngTree child(std::uint64_t id) const {
        RngTree t(0);
        t.master_ = splitmix64(master_ ^ splitmix64(id));
        return t;
    }

    RngStream stream(std::uint64_t id) const {
        RngStream s(0);
        s.eng_.seed(splitmix64(master_ ^ splitmix64(id)));
        return s;
    }

  private:
    std::uint64_t master_;
};

}  // namespace mfac

#endif

#include "evolab/fkmc.hpp"

#include "evolab/error.hpp"
#include "evolab/solver.hpp"

#include <atomic>
#include <cmath>
#include <mutex>
#include <random>
#include <thread>
#include <vector>

namespace evolab {

namespace {

std::uint64_t mix(std::uint64_t z)
{
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Running mean and centred second moment (Welford), merged with Chan's rule.
struct BlockSums {
    long count = 0;
    double mean = 0.0;
    double m2 = 0.0;
    long clipped = 0;
    long increments = 0;

    void add(double v)
    {
        ++count;
        const double delta = v - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (v - mean);
    }

    void merge(const BlockSums& o)
    {
        if (o.count == 0) {
            return;
        }
        const double n = static_cast<double>(count + o.count);
        const double delta = o.mean - mean;
        mean += delta * static_cast<double>(o.count) / n;
        m2 += o.m2 + delta * delta * static_cast<double>(count) * static_cast<double>(o.count) / n;
        count += o.count;
        clipped += o.clipped;
        increments += o.increments;
    }
};

class PathSimulator {
public:
    PathSimulator(const OperatorSpec& op, double s, long steps, double dt)
        : op_(op)
        , d_(op.dim())
        , s_(s)
        , steps_(steps)
        , dt_(dt)
        , sqrt_dt_(std::sqrt(dt))
        , cap_(std::sqrt(dt) * 1e3)
        , sigma_(static_cast<std::size_t>(d_ * d_), 0.0)
    {
        if (op.constant_diffusion()) {
            std::vector<double> zero(static_cast<std::size_t>(d_), 0.0);
            factor(s, zero, sigma_);
        }
    }

    double run(std::mt19937_64& rng, std::span<const double> x0, const PathFunctional& f, BlockSums& sums) const
    {
        std::normal_distribution<double> normal;
        std::vector<double> x(x0.begin(), x0.end());
        std::vector<double> drift(static_cast<std::size_t>(d_));
        std::vector<double> xi(static_cast<std::size_t>(d_));
        std::vector<double> sigma = sigma_;
        double log_weight = 0.0;
        for (long k = 0; k < steps_; ++k) {
            // G(t, s) solves a forward equation, so the path sees the
            // coefficients in reversed time: step k uses time t - k dt.
            const double t = s_ + static_cast<double>(steps_ - k) * dt_;
            if (!op_.constant_diffusion()) {
                factor(t, x, sigma);
            }
            log_weight -= op_.c_at(t, x) * dt_;
            double len2 = 0.0;
            for (int i = 0; i < d_; ++i) {
                drift[static_cast<std::size_t>(i)] = op_.b_at(i, t, x) * dt_;
                len2 += drift[static_cast<std::size_t>(i)] * drift[static_cast<std::size_t>(i)];
            }
            ++sums.increments;
            const double len = std::sqrt(len2);
            if (len > cap_) {
                ++sums.clipped;
                for (double& v : drift) {
                    v *= cap_ / len;
                }
            }
            for (double& v : xi) {
                v = normal(rng);
            }
            for (int i = 0; i < d_; ++i) {
                double noise = 0.0;
                for (int j = 0; j <= i; ++j) {
                    noise += sigma[static_cast<std::size_t>(i * d_ + j)] * xi[static_cast<std::size_t>(j)];
                }
                x[static_cast<std::size_t>(i)] += drift[static_cast<std::size_t>(i)] + noise * sqrt_dt_;
            }
        }
        const double value = std::exp(log_weight) * f(x);
        if (!std::isfinite(value)) {
            throw NumericError("non-finite path value in Feynman-Kac simulation");
        }
        return value;
    }

private:
    // Lower Cholesky factor of 2Q(t, x).
    void factor(double t, std::span<const double> x, std::vector<double>& l) const
    {
        for (int i = 0; i < d_; ++i) {
            for (int j = 0; j <= i; ++j) {
                double v = 2.0 * op_.q_at(i, j, t, x);
                for (int k = 0; k < j; ++k) {
                    v -= l[static_cast<std::size_t>(i * d_ + k)] * l[static_cast<std::size_t>(j * d_ + k)];
                }
                if (i == j) {
                    if (!(v > 0.0)) {
                        throw NumericError("2Q is not positive definite along a path");
                    }
                    l[static_cast<std::size_t>(i * d_ + i)] = std::sqrt(v);
                } else {
                    l[static_cast<std::size_t>(i * d_ + j)] = v / l[static_cast<std::size_t>(j * d_ + j)];
                }
            }
        }
    }

    const OperatorSpec& op_;
    int d_;
    double s_;
    long steps_;
    double dt_;
    double sqrt_dt_;
    double cap_;
    std::vector<double> sigma_;
};

}  // namespace

FkEstimate estimate(const OperatorSpec& op, const PathFunctional& f, std::span<const double> x, double s, double t,
                    const McConfig& cfg)
{
    if (cfg.n_paths < 2) {
        throw ParameterError("need at least two paths");
    }
    if (static_cast<int>(x.size()) != op.dim()) {
        throw ParameterError("starting point has the wrong dimension");
    }
    if (!op.interval().contains(s) || !op.interval().contains(t) || !(s <= t)) {
        throw ParameterError("need s <= t inside the operator interval");
    }
    const long steps = aligned_steps(s, t, cfg.dt);
    const PathSimulator sim(op, s, steps, cfg.dt);
    const long n_blocks = (cfg.n_paths + block_size - 1) / block_size;
    std::vector<BlockSums> blocks(static_cast<std::size_t>(n_blocks));

    std::atomic<long> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (;;) {
            const long b = next.fetch_add(1);
            if (b >= n_blocks) {
                return;
            }
            try {
                std::mt19937_64 rng(mix(cfg.seed ^ mix(static_cast<std::uint64_t>(b))));
                BlockSums& out = blocks[static_cast<std::size_t>(b)];
                const long first = b * block_size;
                const long last = std::min(cfg.n_paths, first + block_size);
                for (long p = first; p < last; ++p) {
                    out.add(sim.run(rng, x, f, out));
                }
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next.store(n_blocks);
                return;
            }
        }
    };
    const int workers = std::max(1, std::min<int>(cfg.workers, static_cast<int>(n_blocks)));
    if (workers == 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back(worker);
        }
    }
    if (failure) {
        std::rethrow_exception(failure);
    }

    BlockSums total;
    for (const BlockSums& b : blocks) {
        total.merge(b);
    }
    const auto n = static_cast<double>(cfg.n_paths);
    FkEstimate est;
    est.mean = total.mean;
    const double var = total.m2 / (n - 1.0);
    est.std_error = std::sqrt(var / n);
    est.n_paths = cfg.n_paths;
    est.seed = cfg.seed;
    est.clip_rate = total.increments > 0 ? static_cast<double>(total.clipped) / static_cast<double>(total.increments)
                                         : 0.0;
    return est;
}

FkEstimate estimate(const OperatorSpec& op, const Expr& f, std::span<const double> x, double s, double t,
                    const McConfig& cfg)
{
    const Program prog(expand_radius(f, op.dim()));
    return estimate(op, [&](std::span<const double> y) { return prog(t, y); }, x, s, t, cfg);
}

FkEstimate tail_mass_mc(const OperatorSpec& op, std::span<const double> x, double s, double t, double radius,
                        const McConfig& cfg)
{
    return estimate(
        op,
        [radius](std::span<const double> y) {
            double s2 = 0.0;
            for (double v : y) {
                s2 += v * v;
            }
            return std::sqrt(s2) > radius ? 1.0 : 0.0;
        },
        x, s, t, cfg);
}

}  // namespace evolab

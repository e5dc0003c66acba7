#include "survbex/optim.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>

namespace survbex {
namespace {

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double inf_norm(std::span<const double> v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

struct Trial {
    double alpha = 0.0;
    double f = 0.0;
    double slope = 0.0;  // directional derivative along the search direction
    Vector x;
    Vector g;
};

class LineSearch {
public:
    LineSearch(const ValueAndGradient& fg, std::span<const double> x0, std::span<const double> dir,
               double f0, double slope0, const BfgsOptions& opt)
        : fg_(fg), x0_(x0), dir_(dir), f0_(f0), slope0_(slope0), opt_(opt) {}

    // Strong-Wolfe search; falls back to the best sufficient-decrease point.
    bool run(double alpha_init, Trial& out) {
        Trial prev{0.0, f0_, slope0_, {}, {}};
        double alpha = alpha_init;
        for (int it = 0; it < 40; ++it) {
            Trial cur;
            if (!evaluate_finite(alpha, cur)) return finish(out);
            alpha = cur.alpha;
            if (approximate_wolfe(cur)) {
                out = std::move(cur);
                return true;
            }
            if (cur.f > f0_ + opt_.c1 * alpha * slope0_ || (it > 0 && cur.f >= prev.f)) {
                return zoom(prev, cur, out);
            }
            note_armijo(cur);
            if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                out = std::move(cur);
                return true;
            }
            if (cur.slope >= 0.0) return zoom(cur, prev, out);
            prev = std::move(cur);
            alpha = 2.0 * alpha;
        }
        return finish(out);
    }

private:
    bool evaluate(double alpha, Trial& t) {
        t.alpha = alpha;
        t.x.resize(x0_.size());
        t.g.assign(x0_.size(), 0.0);
        for (std::size_t i = 0; i < x0_.size(); ++i) t.x[i] = x0_[i] + alpha * dir_[i];
        t.f = fg_(t.x, t.g);
        if (!std::isfinite(t.f) || !all_finite(t.g)) return false;
        t.slope = dot(t.g, dir_);
        return true;
    }

    // Halves the step after a non-finite evaluation.
    bool evaluate_finite(double alpha, Trial& t) {
        for (int k = 0; k <= opt_.max_step_halvings; ++k) {
            if (evaluate(alpha, t)) return true;
            alpha *= 0.5;
        }
        return false;
    }

    // Near a minimizer, function differences drown in roundoff and sufficient
    // decrease can no longer be verified. Accept a point whose value did not rise
    // beyond roundoff and whose slope satisfies the approximate Wolfe bounds
    // c2 * slope0 <= slope <= (1 - 2 c1) * |slope0| (Hager and Zhang).
    bool approximate_wolfe(const Trial& t) const {
        const double armijo = f0_ + opt_.c1 * t.alpha * slope0_;
        if (t.f <= armijo) return false;
        if (t.f > f0_ + 1e-12 * std::abs(f0_)) return false;
        return t.slope >= opt_.c2 * slope0_ && t.slope <= (2.0 * opt_.c1 - 1.0) * slope0_;
    }

    void note_armijo(const Trial& t) {
        if (t.f <= f0_ + opt_.c1 * t.alpha * slope0_ && t.f < f0_ &&
            (!best_ || t.f < best_->f)) {
            best_ = t;
        }
    }

    bool finish(Trial& out) {
        if (best_) {
            out = *best_;
            return true;
        }
        return false;
    }

    bool zoom(Trial lo, Trial hi, Trial& out) {
        for (int it = 0; it < 60; ++it) {
            const double a = lo.alpha, b = hi.alpha;
            const double width = std::abs(b - a);
            if (width < 1e-16 * std::max(1.0, std::abs(a))) break;
            // Safeguarded quadratic interpolation using f(lo), slope(lo), f(hi).
            double alpha = 0.5 * (a + b);
            const double dx = b - a;
            const double denom = 2.0 * (hi.f - lo.f - lo.slope * dx);
            if (denom > 0.0) {
                const double cand = a - lo.slope * dx * dx / denom;
                const double lo_edge = std::min(a, b) + 0.1 * width;
                const double hi_edge = std::max(a, b) - 0.1 * width;
                if (cand >= lo_edge && cand <= hi_edge) alpha = cand;
            }
            Trial cur;
            if (!evaluate(alpha, cur)) {
                hi = std::move(cur);
                hi.alpha = alpha;
                hi.f = std::numeric_limits<double>::infinity();
                hi.slope = 0.0;
                continue;
            }
            if (approximate_wolfe(cur)) {
                out = std::move(cur);
                return true;
            }
            if (cur.f > f0_ + opt_.c1 * alpha * slope0_ || cur.f >= lo.f) {
                hi = std::move(cur);
            } else {
                note_armijo(cur);
                if (std::abs(cur.slope) <= -opt_.c2 * slope0_) {
                    out = std::move(cur);
                    return true;
                }
                if (cur.slope * (hi.alpha - lo.alpha) >= 0.0) hi = lo;
                lo = std::move(cur);
            }
        }
        return finish(out);
    }

    const ValueAndGradient& fg_;
    std::span<const double> x0_;
    std::span<const double> dir_;
    double f0_;
    double slope0_;
    const BfgsOptions& opt_;
    std::optional<Trial> best_;
};

}  // namespace

OptimResult bfgs_minimize(const ValueAndGradient& fg, Vector x0, const BfgsOptions& options) {
    if (!(options.tol > 0.0)) throw std::domain_error("bfgs_minimize: tol must be positive");
    const std::size_t n = x0.size();

    OptimResult res;
    res.minimizer = std::move(x0);
    Vector g(n, 0.0);
    res.value = fg(res.minimizer, g);
    if (!std::isfinite(res.value) || !all_finite(g)) {
        throw std::domain_error("bfgs_minimize: objective is not finite at the starting point");
    }
    res.gradient_norm = inf_norm(g);
    if (options.record_trace) res.trace.emplace_back(0, res.value);

    // Inverse Hessian approximation, row-major.
    std::vector<double> hinv(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
    bool scaled = false;

    Vector dir(n), s(n), y(n), hy(n);
    for (int iter = 0; iter < options.max_iter; ++iter) {
        if (res.gradient_norm < options.tol) {
            res.converged = true;
            res.message = "gradient tolerance reached";
            return res;
        }

        for (std::size_t i = 0; i < n; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc -= hinv[i * n + j] * g[j];
            dir[i] = acc;
        }
        double slope = dot(dir, g);
        if (!(slope < 0.0)) {
            // Lost positive definiteness; restart from steepest descent.
            std::fill(hinv.begin(), hinv.end(), 0.0);
            for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = 1.0;
            for (std::size_t i = 0; i < n; ++i) dir[i] = -g[i];
            slope = dot(dir, g);
            scaled = false;
        }

        double alpha0 = 1.0;
        if (!scaled) {
            double norm2 = std::sqrt(dot(dir, dir));
            alpha0 = std::min(1.0, 1.0 / std::max(norm2, 1e-300));
        }

        Trial step;
        LineSearch search(fg, res.minimizer, dir, res.value, slope, options);
        if (!search.run(alpha0, step)) {
            res.iterations = iter;
            res.message = "line search failed to find a lower point";
            return res;
        }

        for (std::size_t i = 0; i < n; ++i) {
            s[i] = step.x[i] - res.minimizer[i];
            y[i] = step.g[i] - g[i];
        }
        const double ys = dot(y, s);
        const double yy = dot(y, y);
        if (ys > 1e-12 * std::sqrt(yy * dot(s, s))) {
            if (!scaled) {
                const double gamma = ys / yy;
                for (std::size_t i = 0; i < n; ++i) hinv[i * n + i] = gamma;
                scaled = true;
            }
            // H <- (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / ys;
            for (std::size_t i = 0; i < n; ++i) {
                double acc = 0.0;
                for (std::size_t j = 0; j < n; ++j) acc += hinv[i * n + j] * y[j];
                hy[i] = acc;
            }
            const double yhy = dot(y, hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    hinv[i * n + j] += -rho * (hy[i] * s[j] + s[i] * hy[j]) +
                                       (rho * rho * yhy + rho) * s[i] * s[j];
                }
            }
        }

        res.minimizer = std::move(step.x);
        res.value = step.f;
        g = std::move(step.g);
        res.gradient_norm = inf_norm(g);
        res.iterations = iter + 1;
        if (options.record_trace) res.trace.emplace_back(iter + 1, res.value);
    }
    res.converged = res.gradient_norm < options.tol;
    res.message = res.converged ? "gradient tolerance reached" : "iteration limit reached";
    return res;
}

OptimResult bfgs_minimize(const Objective& objective, const Gradient& gradient, Vector x0,
                          const BfgsOptions& options) {
    ValueAndGradient fg = [&](std::span<const double> x, std::span<double> grad) {
        const double f = objective(x);
        if (!std::isfinite(f)) return f;
        Vector gv = gradient(x);
        std::copy(gv.begin(), gv.end(), grad.begin());
        return f;
    };
    return bfgs_minimize(fg, std::move(x0), options);
}

Vector finite_diff_gradient(const Objective& objective, std::span<const double> x, double h) {
    Vector probe(x.begin(), x.end());
    Vector grad(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        const double orig = probe[j];
        probe[j] = orig + h;
        const double fp = objective(probe);
        probe[j] = orig - h;
        const double fm = objective(probe);
        probe[j] = orig;
        grad[j] = (fp - fm) / (2.0 * h);
    }
    return grad;
}

}  // namespace survbex

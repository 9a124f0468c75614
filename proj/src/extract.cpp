#include "kitwpa/extract.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include <Eigen/Dense>

#include "kitwpa/errors.hpp"

namespace kitwpa {

double FitResult::i_star_sigma() const { return std::sqrt(covariance[0][0]); }

double FitResult::i_quartic_sigma() const { return std::sqrt(covariance[1][1]); }

namespace {

// Normalized problem: x = I / I_max, y = f / f_ref, parameters
// (f0, a, b) in the same units so every entry is of order one.
struct Problem {
    std::vector<double> x2, y;
    bool fit_f0 = true;
    double fixed_f0 = 0.0;
    bool quartic = true;
};

struct Params {
    double f0 = 0.0, a = 0.0, b = 0.0;
};

Eigen::VectorXd residuals(const Problem& pr, const Params& p) {
    Eigen::VectorXd r(pr.y.size());
    for (std::size_t i = 0; i < pr.y.size(); ++i) {
        const double x2 = pr.x2[i];
        r[i] = p.f0 * (1.0 - 0.5 * (p.a * x2 + p.b * x2 * x2)) - pr.y[i];
    }
    return r;
}

// Columns: [f0 if fitted], a, [b if quartic].
Eigen::MatrixXd jacobian(const Problem& pr, const Params& p) {
    const int cols = (pr.fit_f0 ? 1 : 0) + 1 + (pr.quartic ? 1 : 0);
    Eigen::MatrixXd j(pr.y.size(), cols);
    for (std::size_t i = 0; i < pr.y.size(); ++i) {
        const double x2 = pr.x2[i];
        int c = 0;
        if (pr.fit_f0) j(i, c++) = 1.0 - 0.5 * (p.a * x2 + p.b * x2 * x2);
        j(i, c++) = -0.5 * p.f0 * x2;
        if (pr.quartic) j(i, c++) = -0.5 * p.f0 * x2 * x2;
    }
    return j;
}

Params step(const Problem& pr, const Params& p, const Eigen::VectorXd& d) {
    Params q = p;
    int c = 0;
    if (pr.fit_f0) q.f0 += d[c++];
    q.a += d[c++];
    if (pr.quartic) q.b += d[c++];
    return q;
}

struct LmOutcome {
    Params p;
    int iterations = 0;
    bool converged = false;
};

LmOutcome levenberg_marquardt(const Problem& pr, Params p, int max_iter, double tol) {
    double lambda = 1e-3;
    Eigen::VectorXd r = residuals(pr, p);
    double cost = r.squaredNorm();
    for (int it = 1; it <= max_iter; ++it) {
        const Eigen::MatrixXd j = jacobian(pr, p);
        const Eigen::MatrixXd jtj = j.transpose() * j;
        const Eigen::VectorXd g = j.transpose() * r;
        if (g.lpNorm<Eigen::Infinity>() <= 1e-30) return {p, it, true};
        bool accepted = false;
        for (int tries = 0; tries < 40 && !accepted; ++tries) {
            Eigen::MatrixXd a = jtj;
            a.diagonal() += lambda * jtj.diagonal().cwiseMax(1e-300);
            const Eigen::VectorXd d = a.ldlt().solve(-g);
            const Params q = step(pr, p, d);
            const Eigen::VectorXd rq = residuals(pr, q);
            const double cq = rq.squaredNorm();
            if (cq <= cost) {
                const double scale = std::abs(p.f0) + std::abs(p.a) + std::abs(p.b);
                const bool small = d.norm() <= tol * (scale + tol);
                p = q;
                r = rq;
                const bool flat = cost - cq <= 1e-30 + 1e-15 * cost;
                cost = cq;
                lambda = std::max(lambda / 10.0, 1e-15);
                accepted = true;
                if (small || flat) return {p, it, true};
            } else {
                lambda *= 10.0;
            }
        }
        if (!accepted) return {p, it, true};  // no descent direction left: at the minimum to rounding
    }
    return {p, max_iter, false};
}

}  // namespace

FitResult fit_bandgap_shift(std::span<const double> current, std::span<const double> frequency,
                            const BandgapFitOptions& options) {
    const std::size_t n = current.size();
    if (frequency.size() != n) throw InvalidArgument("fit_bandgap_shift: input lengths differ");
    if (n < 5) throw InvalidArgument("fit_bandgap_shift: at least 5 points are required");
    double i_max = 0.0, f_ref = 0.0;
    bool has_zero = false;
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(current[i]) || !std::isfinite(frequency[i]) || !(frequency[i] > 0.0))
            throw InvalidArgument("fit_bandgap_shift: non-finite or non-positive data");
        i_max = std::max(i_max, std::abs(current[i]));
        f_ref = std::max(f_ref, frequency[i]);
        has_zero |= current[i] == 0.0;
    }
    if (!has_zero && !options.f0) throw InvalidArgument("fit_bandgap_shift: need a zero-bias point or a supplied f0");
    if (!(i_max > 0.0)) throw InvalidArgument("fit_bandgap_shift: all currents are zero");

    Problem pr;
    pr.fit_f0 = !options.f0.has_value();
    pr.fixed_f0 = options.f0 ? *options.f0 / f_ref : 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = current[i] / i_max;
        pr.x2.push_back(x * x);
        pr.y.push_back(frequency[i] / f_ref);
    }

    // Quadratic-only linear fit y = c0 - c1 x^2 seeds f0 and a; b is seeded
    // from the remaining residual regressed on x^4.
    Params init;
    {
        Eigen::MatrixXd m(n, pr.fit_f0 ? 2 : 1);
        Eigen::VectorXd rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            if (pr.fit_f0) {
                m(i, 0) = 1.0;
                m(i, 1) = -pr.x2[i];
                rhs[i] = pr.y[i];
            } else {
                m(i, 0) = -pr.x2[i];
                rhs[i] = pr.y[i] - pr.fixed_f0;
            }
        }
        const Eigen::VectorXd c = m.colPivHouseholderQr().solve(rhs);
        init.f0 = pr.fit_f0 ? c[0] : pr.fixed_f0;
        const double c1 = pr.fit_f0 ? c[1] : c[0];
        init.a = 2.0 * c1 / init.f0;
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const double res = init.f0 * (1.0 - 0.5 * init.a * pr.x2[i]) - pr.y[i];
            const double x4 = pr.x2[i] * pr.x2[i];
            num += res * x4;
            den += x4 * x4;
        }
        init.b = std::max(2.0 * num / (init.f0 * den), 1e-6 * std::abs(init.a));
    }
    if (!(init.a > 0.0)) throw InvalidArgument("fit_bandgap_shift: feature frequency does not decrease with current");

    auto solve = [&](bool quartic) {
        Problem p = pr;
        p.quartic = quartic;
        Params start = init;
        if (!quartic) start.b = 0.0;
        LmOutcome out = levenberg_marquardt(p, start, options.max_iterations, options.tolerance);
        return std::pair{p, out};
    };

    auto [problem, outcome] = solve(true);
    auto covariance_of = [&](const Problem& p, const Params& q) {
        const Eigen::MatrixXd j = jacobian(p, q);
        const double rss = residuals(p, q).squaredNorm();
        const double dof = static_cast<double>(n) - static_cast<double>(j.cols());
        const double s2 = dof > 0 ? rss / dof : 0.0;
        Eigen::MatrixXd cov = s2 * (j.transpose() * j).inverse();
        return std::pair{cov, rss};
    };
    auto [cov, rss] = covariance_of(problem, outcome.p);
    const int ib = static_cast<int>(cov.rows()) - 1;
    const double b = outcome.p.b;
    const double sigma_b = std::sqrt(std::max(cov(ib, ib), 0.0));
    // Unconstrained: negative, statistically insignificant, or too small to
    // move any data point beyond rounding.
    const bool constrained = b > 0.0 && sigma_b < b / 3.0 && b > 1e-10 * outcome.p.a;

    FitResult result;
    result.quartic_constrained = constrained;
    if (!constrained) {
        std::tie(problem, outcome) = solve(false);
        std::tie(cov, rss) = covariance_of(problem, outcome.p);
    }
    if (!outcome.converged) {
        std::ostringstream msg;
        msg << "fit_bandgap_shift: no convergence after " << outcome.iterations << " iterations";
        throw ConvergenceError(msg.str());
    }
    const Params& p = outcome.p;
    if (!(p.a > 0.0)) throw ConvergenceError("fit_bandgap_shift: fitted quadratic coefficient is not positive");
    result.converged = true;
    result.iterations = outcome.iterations;
    result.f0 = p.f0 * f_ref;
    result.i_star = i_max / std::sqrt(p.a);
    result.i_quartic = constrained ? i_max / std::pow(p.b, 0.25) : std::numeric_limits<double>::infinity();
    result.residual_norm = std::sqrt(rss) * f_ref;

    const int ia = problem.fit_f0 ? 1 : 0;
    const double da = -0.5 * i_max * std::pow(p.a, -1.5);
    result.covariance[0][0] = da * da * cov(ia, ia);
    if (constrained) {
        const int jb = ia + 1;
        const double db = -0.25 * i_max * std::pow(p.b, -1.25);
        result.covariance[1][1] = db * db * cov(jb, jb);
        result.covariance[0][1] = result.covariance[1][0] = da * db * cov(ia, jb);
    }
    result.f0_sigma = problem.fit_f0 ? std::sqrt(std::max(cov(0, 0), 0.0)) * f_ref : 0.0;
    result.span_adequate = i_max >= 0.3 * result.i_star;
    return result;
}

namespace {

double median(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t m = v.size() / 2;
    return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

void check_sweep(std::span<const double> p_in) {
    for (std::size_t i = 1; i < p_in.size(); ++i)
        if (!(p_in[i] > p_in[i - 1])) throw InvalidArgument("power sweep: input power must be strictly increasing");
}

// Longest leading run whose gains all stay within 0.1 dB of the run median.
std::size_t flat_prefix(const std::vector<double>& gain) {
    std::size_t best = 0;
    for (std::size_t k = 1; k <= gain.size(); ++k) {
        const std::vector<double> head(gain.begin(), gain.begin() + static_cast<std::ptrdiff_t>(k));
        const double med = median(head);
        bool ok = true;
        for (double g : head) ok = ok && std::abs(g - med) <= 0.1;
        if (!ok) break;
        best = k;
    }
    return best;
}

}  // namespace

std::optional<double> p1db(std::span<const double> p_in_dbm, std::span<const double> p_out_dbm) {
    const std::size_t n = p_in_dbm.size();
    if (p_out_dbm.size() != n) throw InvalidArgument("p1db: input lengths differ");
    if (n < 6) throw InvalidArgument("p1db: at least 6 points are required");
    check_sweep(p_in_dbm);
    std::vector<double> gain(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (!std::isfinite(p_out_dbm[i])) throw InvalidArgument("p1db: non-finite output power");
        gain[i] = p_out_dbm[i] - p_in_dbm[i];
    }
    const std::size_t flat = flat_prefix(gain);
    if (flat < 3) throw InvalidArgument("p1db: no small-signal region of 3 points within 0.1 dB");
    const double g0 = median(std::vector<double>(gain.begin(), gain.begin() + static_cast<std::ptrdiff_t>(flat)));
    const double target = g0 - 1.0;
    std::vector<double> crossings;
    for (std::size_t i = flat - 1; i + 1 < n; ++i) {
        if (gain[i] >= target && gain[i + 1] < target) {
            const double t = (gain[i] - target) / (gain[i] - gain[i + 1]);
            crossings.push_back(p_in_dbm[i] + t * (p_in_dbm[i + 1] - p_in_dbm[i]));
        }
    }
    if (crossings.empty()) return std::nullopt;
    if (crossings.size() > 1) {
        std::ostringstream msg;
        msg << "p1db: gain crosses G0 - 1 dB more than once at";
        for (double c : crossings) msg << ' ' << c;
        msg << " dBm";
        throw AmbiguityError(msg.str());
    }
    return crossings.front();
}

Ip3Result ip3(std::span<const double> p_in_dbm, std::span<const double> p_fund_dbm,
              std::span<const double> p_imd_dbm) {
    const std::size_t n = p_in_dbm.size();
    if (p_fund_dbm.size() != n || p_imd_dbm.size() != n) throw InvalidArgument("ip3: input lengths differ");
    if (n < 3) throw InvalidArgument("ip3: at least 3 points are required");
    check_sweep(p_in_dbm);
    std::vector<double> gain(n);
    for (std::size_t i = 0; i < n; ++i) gain[i] = p_fund_dbm[i] - p_in_dbm[i];
    const std::size_t m = flat_prefix(gain);
    if (m < 3) throw InvalidArgument("ip3: no small-signal region of 3 points within 0.1 dB");

    auto slope_of = [&](std::span<const double> y) {
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < m; ++i) {
            if (!std::isfinite(y[i])) throw InvalidArgument("ip3: non-finite power in the small-signal region");
            sx += p_in_dbm[i];
            sy += y[i];
            sxx += p_in_dbm[i] * p_in_dbm[i];
            sxy += p_in_dbm[i] * y[i];
        }
        const double dm = static_cast<double>(m);
        return (dm * sxy - sx * sy) / (dm * sxx - sx * sx);
    };
    Ip3Result r;
    r.points_used = m;
    r.fundamental_slope = slope_of(p_fund_dbm);
    r.intermod_slope = slope_of(p_imd_dbm);
    if (std::abs(r.fundamental_slope - 1.0) > 0.15 || std::abs(r.intermod_slope - 3.0) > 0.15) {
        std::ostringstream msg;
        msg << "ip3: not in the small-signal regime (slopes " << r.fundamental_slope << " and " << r.intermod_slope
            << ")";
        throw DomainError(msg.str());
    }
    // Lines with slopes pinned to 1 and 3: the least-squares intercepts are
    // the mean offsets.
    double b1 = 0.0, b3 = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        b1 += p_fund_dbm[i] - p_in_dbm[i];
        b3 += p_imd_dbm[i] - 3.0 * p_in_dbm[i];
    }
    b1 /= static_cast<double>(m);
    b3 /= static_cast<double>(m);
    r.iip3_dbm = 0.5 * (b1 - b3);
    return r;
}

std::vector<double> smooth(std::span<const double> y, std::size_t window) {
    if (window % 2 == 0) throw InvalidArgument("smooth: window must be odd");
    if (window > y.size()) throw InvalidArgument("smooth: window exceeds trace length");
    const std::size_t half = window / 2;
    std::vector<double> out(y.size());
    for (std::size_t i = 0; i < y.size(); ++i) {
        const std::size_t lo = i >= half ? i - half : 0;
        const std::size_t hi = std::min(y.size() - 1, i + half);
        double s = 0.0;
        for (std::size_t j = lo; j <= hi; ++j) s += y[j];
        out[i] = s / static_cast<double>(hi - lo + 1);
    }
    return out;
}

}  // namespace kitwpa

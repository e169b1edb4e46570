#include "nvmag/coherence.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include <Eigen/Dense>
#include <unsupported/Eigen/NonLinearOptimization>
#include <fmt/format.h>

namespace nvmag {

void CoherenceModel::validate() const {
    if (!(c0 > 0.0)) throw ValidationError("CoherenceModel: c0 must be positive");
    if (!(t2_star > 0.0)) throw ValidationError("CoherenceModel: t2_star must be positive");
    if (!(t2 > 0.0)) throw ValidationError("CoherenceModel: t2 must be positive");
    if (!(stretch_p > 0.0 && stretch_p <= 3.0))
        throw ValidationError("CoherenceModel: stretch_p must lie in (0, 3]");
}

double ramsey_signal(const CoherenceModel& model, double tau) {
    double beat = 0.0;
    for (double w : model.hyperfine_freqs) beat += std::cos(w * tau);
    return model.c0 * std::exp(-tau / model.t2_star) * beat;
}

double hahn_signal(const CoherenceModel& model, double tau) {
    return model.c0 * std::exp(-std::pow(2.0 * tau / model.t2, model.stretch_p));
}

std::vector<double> hyperfine_triplet(double detuning_hz, double hf_hz) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    return {two_pi * (detuning_hz - hf_hz), two_pi * detuning_hz, two_pi * (detuning_hz + hf_hz)};
}

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

constexpr double kMaxStretch = 3.0;

// Unconstrained internal coordinates keep the decay times positive and the
// stretch exponent in (0, 3].
double to_stretch(double theta) { return kMaxStretch / (1.0 + std::exp(-theta)); }
double from_stretch(double p) { return -std::log(kMaxStretch / p - 1.0); }

struct Problem {
    CoherenceKind kind;
    std::span<const CoherenceSample> samples;
    double detuning_hz;

    int n_params() const { return 3; }

    // Natural parameters: Ramsey (c0, t2*, hf_hz); Hahn (c0, t2, p).
    VectorXd natural(const VectorXd& x) const {
        VectorXd p(3);
        p[0] = x[0];
        p[1] = std::exp(x[1]);
        p[2] = kind == CoherenceKind::Ramsey ? x[2] : to_stretch(x[2]);
        return p;
    }

    double model(const VectorXd& p, double tau) const {
        if (kind == CoherenceKind::Ramsey) {
            CoherenceModel m;
            m.c0 = p[0];
            m.t2_star = p[1];
            m.hyperfine_freqs = hyperfine_triplet(detuning_hz, p[2]);
            return ramsey_signal(m, tau);
        }
        CoherenceModel m;
        m.c0 = p[0];
        m.t2 = p[1];
        m.stretch_p = p[2];
        return hahn_signal(m, tau);
    }

    // d model / d natural parameters.
    Eigen::RowVector3d gradient(const VectorXd& p, double tau) const {
        Eigen::RowVector3d g;
        if (kind == CoherenceKind::Ramsey) {
            constexpr double two_pi = 2.0 * std::numbers::pi;
            const double env = std::exp(-tau / p[1]);
            double beat = 0.0;
            double dbeat_dhf = 0.0;
            for (int k = -1; k <= 1; ++k) {
                const double w = two_pi * (detuning_hz + k * p[2]);
                beat += std::cos(w * tau);
                dbeat_dhf += -std::sin(w * tau) * tau * two_pi * k;
            }
            g[0] = env * beat;
            g[1] = p[0] * env * beat * tau / (p[1] * p[1]);
            g[2] = p[0] * env * dbeat_dhf;
        } else {
            const double u = 2.0 * tau / p[1];
            const double up = u > 0.0 ? std::pow(u, p[2]) : 0.0;
            const double e = std::exp(-up);
            g[0] = e;
            g[1] = p[0] * e * up * p[2] / p[1];
            g[2] = u > 0.0 ? -p[0] * e * up * std::log(u) : 0.0;
        }
        return g;
    }

    MatrixXd natural_jacobian(const VectorXd& p) const {
        MatrixXd j(samples.size(), 3);
        for (std::size_t i = 0; i < samples.size(); ++i) j.row(i) = gradient(p, samples[i].tau);
        return j;
    }

    double residual_norm(const VectorXd& p) const {
        double s = 0.0;
        for (const auto& smp : samples) {
            const double r = model(p, smp.tau) - smp.value;
            s += r * r;
        }
        return std::sqrt(s);
    }
};

struct Functor {
    const Problem& problem;

    int values() const { return static_cast<int>(problem.samples.size()); }
    int inputs() const { return problem.n_params(); }

    int operator()(const VectorXd& x, VectorXd& fvec) const {
        const VectorXd p = problem.natural(x);
        for (std::size_t i = 0; i < problem.samples.size(); ++i)
            fvec[i] = problem.model(p, problem.samples[i].tau) - problem.samples[i].value;
        return 0;
    }

    int df(const VectorXd& x, MatrixXd& fjac) const {
        const VectorXd p = problem.natural(x);
        fjac = problem.natural_jacobian(p);
        // Chain rule into the internal coordinates.
        fjac.col(1) *= p[1];
        if (problem.kind == CoherenceKind::Hahn) fjac.col(2) *= p[2] * (1.0 - p[2] / kMaxStretch);
        return 0;
    }
};

// Decay-time guess: first tau at which the running envelope (max |v| over
// the remaining samples) drops below |v0|/e.
double envelope_crossing(std::span<const CoherenceSample> s) {
    const double threshold = std::abs(s.front().value) / std::numbers::e;
    std::vector<double> suffix_max(s.size());
    double m = 0.0;
    for (std::size_t i = s.size(); i-- > 0;) {
        m = std::max(m, std::abs(s[i].value));
        suffix_max[i] = m;
    }
    for (std::size_t i = 0; i < s.size(); ++i)
        if (suffix_max[i] < threshold) return s[i].tau;
    return s.back().tau;
}

FitResult make_result(const Problem& problem, const VectorXd& p, int iterations) {
    FitResult r;
    r.kind = problem.kind;
    r.iterations = iterations;
    r.values.assign(p.data(), p.data() + p.size());
    r.std_errors.assign(3, std::numeric_limits<double>::quiet_NaN());
    r.residual_norm = problem.residual_norm(p);
    r.model.c0 = p[0];
    if (problem.kind == CoherenceKind::Ramsey) {
        r.names = {"c0", "t2_star", "hf_hz"};
        r.model.t2_star = p[1];
        r.model.hyperfine_freqs = hyperfine_triplet(problem.detuning_hz, p[2]);
    } else {
        r.names = {"c0", "t2", "stretch_p"};
        r.model.t2 = p[1];
        r.model.stretch_p = p[2];
    }
    return r;
}

}  // namespace

FitResult fit_coherence(std::span<const CoherenceSample> samples, CoherenceKind kind,
                        const FitOptions& options) {
    if (samples.size() < 8) throw InputError("fit_coherence: need at least 8 samples");
    std::vector<CoherenceSample> sorted(samples.begin(), samples.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.tau < b.tau; });
    for (const auto& s : sorted)
        if (s.tau < 0.0 || !std::isfinite(s.value)) throw InputError("fit_coherence: bad sample");

    const auto [lo, hi] = std::minmax_element(sorted.begin(), sorted.end(),
                                              [](const auto& a, const auto& b) { return a.value < b.value; });
    const double scale = std::max(std::abs(lo->value), std::abs(hi->value));
    if (hi->value - lo->value <= 1e-12 * std::max(1.0, scale))
        throw RankDeficiencyError("fit_coherence: samples are constant; decay is unidentifiable");

    const Problem problem{kind, sorted, options.detuning_hz};
    const double n_beats = kind == CoherenceKind::Ramsey ? 3.0 : 1.0;
    const double c0_guess = sorted.front().value / n_beats;
    double t_guess = envelope_crossing(sorted);
    if (kind == CoherenceKind::Hahn) t_guess *= 2.0;
    if (!(t_guess > 0.0)) t_guess = sorted.back().tau > 0.0 ? sorted.back().tau : 1.0;

    VectorXd x(3);
    x[0] = c0_guess;
    x[1] = std::log(t_guess);
    x[2] = kind == CoherenceKind::Ramsey ? options.hf_hz : from_stretch(1.0);

    Functor functor{problem};
    Eigen::LevenbergMarquardt<Functor> lm(functor);
    lm.parameters.xtol = options.xtol;
    lm.parameters.ftol = 1e-14;
    lm.parameters.maxfev = 10 * options.max_iterations;

    auto status = lm.minimizeInit(x);
    int iterations = 0;
    while (status == Eigen::LevenbergMarquardtSpace::Running || status == Eigen::LevenbergMarquardtSpace::NotStarted) {
        if (iterations >= options.max_iterations) break;
        status = lm.minimizeOneStep(x);
        ++iterations;
    }

    const VectorXd p = problem.natural(x);
    FitResult result = make_result(problem, p, iterations);

    using Eigen::LevenbergMarquardtSpace::Status;
    const bool converged = status == Status::XtolTooSmall || status == Status::RelativeErrorTooSmall ||
                           status == Status::RelativeReductionTooSmall ||
                           status == Status::RelativeErrorAndReductionTooSmall ||
                           status == Status::FtolTooSmall || status == Status::GtolTooSmall ||
                           status == Status::CosinusTooSmall;
    if (!converged)
        throw ConvergenceError(
            fmt::format("fit_coherence: no convergence after {} iterations (status {})", iterations,
                        static_cast<int>(status)),
            result);

    // Column-equilibrate before the rank test; the natural parameters span
    // many decades (seconds vs hertz).
    MatrixXd j = problem.natural_jacobian(p);
    const Eigen::VectorXd norms = j.colwise().norm();
    if ((norms.array() == 0.0).any())
        throw RankDeficiencyError("fit_coherence: a parameter has no influence on the model");
    j = j * norms.cwiseInverse().asDiagonal();
    Eigen::ColPivHouseholderQR<MatrixXd> qr(j);
    qr.setThreshold(1e-10);
    if (qr.rank() < j.cols())
        throw RankDeficiencyError("fit_coherence: Jacobian is rank deficient at the solution");

    const double dof = static_cast<double>(sorted.size()) - 3.0;
    const double s2 = result.residual_norm * result.residual_norm / dof;
    const MatrixXd scaled_cov = s2 * (j.transpose() * j).inverse();
    for (int i = 0; i < 3; ++i)
        result.std_errors[i] = std::sqrt(std::max(0.0, scaled_cov(i, i))) / norms[i];
    return result;
}

}  // namespace nvmag

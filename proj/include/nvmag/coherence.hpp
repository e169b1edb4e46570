#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "nvmag/error.hpp"

namespace nvmag {

/// Ramsey: c0 * exp(-tau/t2_star) * sum_i cos(omega_i tau)
/// Hahn echo: c0 * exp(-(2 tau / t2)^p)
struct CoherenceModel {
    double c0 = 1.0;
    double t2_star = 1.6e-6;  ///< s
    double t2 = 19.3e-6;      ///< s
    double stretch_p = 1.0;   ///< in (0, 3]
    std::vector<double> hyperfine_freqs;  ///< omega_i, rad/s

    void validate() const;
};

double ramsey_signal(const CoherenceModel& model, double tau);
double hahn_signal(const CoherenceModel& model, double tau);

/// Angular beat frequencies detuning + {-hf, 0, +hf} (inputs in Hz).
std::vector<double> hyperfine_triplet(double detuning_hz, double hf_hz);

enum class CoherenceKind { Ramsey, Hahn };

struct CoherenceSample {
    double tau = 0.0;
    double value = 0.0;
};

struct FitOptions {
    /// Ramsey only: the beat frequencies are detuning + p*hf. The detuning is
    /// held fixed, the splitting is refined.
    double detuning_hz = 0.0;
    double hf_hz = 2.16e6;
    double xtol = 1e-8;
    int max_iterations = 200;
};

struct FitResult {
    CoherenceKind kind = CoherenceKind::Hahn;
    CoherenceModel model;
    std::vector<std::string> names;    ///< fitted parameter names
    std::vector<double> values;        ///< fitted parameter values (natural units)
    std::vector<double> std_errors;    ///< one per value
    double residual_norm = 0.0;
    int iterations = 0;
};

class ConvergenceError : public Error {
public:
    ConvergenceError(const std::string& what, FitResult best)
        : Error(what), best_(std::move(best)) {}
    const FitResult& best_so_far() const noexcept { return best_; }

private:
    FitResult best_;
};

class RankDeficiencyError : public Error {
public:
    using Error::Error;
};

/// Nonlinear least squares fit of a decay model. Requires >= 8 samples.
FitResult fit_coherence(std::span<const CoherenceSample> samples, CoherenceKind kind,
                        const FitOptions& options = {});

}  // namespace nvmag

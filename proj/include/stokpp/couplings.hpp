#pragma once

#include <cstdint>
#include <string>

#include "stokpp/field.hpp"
#include "stokpp/integrator.hpp"
#include "stokpp/rng.hpp"

namespace stokpp {

enum class CouplingKind { monotone, superprocess, upper_measure };

std::string to_string(CouplingKind kind);

/// Two trajectories on one grid and time step, built so that lower <= upper
/// cell by cell at every step.
struct CoupledPair {
    Trajectory lower;
    Trajectory upper;
    CouplingKind kind = CouplingKind::monotone;
    StepParams params{0.001, 0.1};
    std::uint64_t seed = 0;
    std::uint32_t replicate = 0;
    std::uint32_t lower_stream = 0;
    std::uint32_t increment_stream = 0;
    /// min over every step and cell of (upper - lower); 0 if both are zero.
    double min_gap = 0.0;
    /// Number of (step, cell) pairs with upper < lower.
    std::uint64_t violations = 0;
};

/// u from u0 on `lower_noise`; the increment w from v0 - u0 solves the
/// generalized equation with beta = 2 gamma u, alpha = 0 on `increment_noise`;
/// the upper trajectory is u + w, which solves the original equation from v0.
/// Throws std::invalid_argument unless u0 <= v0 on a shared grid, or if `c`
/// already carries alpha/beta rates.
CoupledPair monotone_pair(const Field& u0, const Field& v0, const Coefficients& c, const StepParams& p, double horizon,
                          const SampleSchedule& schedule, const NoiseStream& lower_noise,
                          const NoiseStream& increment_noise);

/// u solves the core equation; w from 0 has immigration u^2 and no
/// overcrowding, so u + w is the dominating superprocess.
/// Throws std::invalid_argument unless c.gamma == 1.
CoupledPair superprocess_pair(const Field& u0, const Coefficients& c, const StepParams& p, double horizon,
                              const SampleSchedule& schedule, const NoiseStream& lower_noise,
                              const NoiseStream& increment_noise);

enum class UpperKind {
    full,   // psi_N = N everywhere
    left,   // zeta_N, infinite mass on the left half-line
    right,  // xi_N, mirror image of zeta_N
};

std::string to_string(UpperKind kind);
UpperKind parse_upper_kind(const std::string& text);

Profile upper_profile(UpperKind kind, double level);
/// The step parameters with boundaries held on the side(s) where the profile
/// has its plateau.
StepParams upper_params(UpperKind kind, const StepParams& p);

/// One draw of u_T started from the level-N approximant on `grid`.
Field upper_measure_sample(double T, double level, UpperKind kind, const Coefficients& c, const StepParams& p,
                           const Grid& grid, const NoiseStream& noise);

/// monotone_pair of u0 against zeta_N (so R0(lower) <= R0(upper) throughout).
CoupledPair left_upper_pair(const Field& u0, double level, const Coefficients& c, const StepParams& p, double horizon,
                            const SampleSchedule& schedule, const NoiseStream& lower_noise,
                            const NoiseStream& increment_noise);

/// JSON manifest: kind, seed, replicate, both stream ids, min gap, violations.
std::string pair_manifest_json(const CoupledPair& pair);

} // namespace stokpp

#pragma once

// Partition functions of the log-gamma polymer: point-to-point, full grids
// from one start point, hexagon-restricted, and the maximal free energy over
// all (or restricted) ordered start/end pairs.

#include <compare>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "lgpolymer/sampler.hpp"
#include "lgpolymer/specialfn.hpp"

namespace lgp {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

/// log(exp(a) + exp(b)) with the larger argument factored out.
inline double log_add(double a, double b) {
  if (a < b) std::swap(a, b);
  if (b == kNegInf) return a;
  return a + std::log1p(std::exp(b - a));
}

/// 1-based lattice coordinates; ordering is lexicographic on (x, y).
struct LatticePoint {
  int x = 1;
  int y = 1;
  friend auto operator<=>(const LatticePoint&, const LatticePoint&) = default;
};

/// Component-wise partial order: a <= b in both coordinates.
constexpr bool precedes(LatticePoint a, LatticePoint b) { return a.x <= b.x && a.y <= b.y; }

using PointSet = std::vector<LatticePoint>;

/// log Z(start; T) for every T in the field; -inf where T is not >= start.
struct LogZGrid {
  LatticePoint start;
  RowMatrix values;

  double at(LatticePoint t) const { return values(t.x - 1, t.y - 1); }
};

/// log Z(start; end), exact path sum, computed in log space.
double log_partition(const WeightField& field, LatticePoint start, LatticePoint end);

/// One log-space sweep giving log Z(start; T) for all T >= start.
LogZGrid log_partition_grid(const WeightField& field, LatticePoint start);

enum class FreeEnergyMode { exact, corner_restricted, restricted };
std::string to_string(FreeEnergyMode mode);

struct MaxFreeEnergyResult {
  double value = kNegInf;
  LatticePoint arg_start;
  LatticePoint arg_end;
  FreeEnergyMode mode = FreeEnergyMode::exact;
  double delta = 0.0;  // corner exponent parameter, corner_restricted mode only

  /// True when no admissible ordered pair existed (value is -inf).
  bool empty() const { return value == kNegInf; }
};

struct ExactOptions {
  int max_n = 256;  // capacity limit for the O(N^4) search
  int threads = 1;
};

/// Exact maximum of log Z over all ordered pairs in an N x N field. Ties go to
/// the lexicographically smallest (start, end).
///
/// The sweep from each start runs over anti-diagonals in linear space with a
/// per-diagonal rescaling (the diagonal maximum is pulled out into a running
/// log-scale), which keeps every stored value in [0, 1] and avoids a
/// transcendental per cell. Fields whose single weights are out of double
/// range fall back to the log-space sweep.
MaxFreeEnergyResult max_free_energy_exact(const WeightField& field, const ExactOptions& options = {});

/// Same maximum via one log-space grid per start point. Reference path for
/// cross-checks; O(N^4) transcendental evaluations.
MaxFreeEnergyResult max_free_energy_log_space(const WeightField& field);

/// Maximum restricted to start in k1, end in k2, start <= end.
MaxFreeEnergyResult max_free_energy_restricted(const WeightField& field, std::span<const LatticePoint> k1,
                                               std::span<const LatticePoint> k2, int threads = 1);

struct CornerSets {
  int side = 0;  // floor(N^(1/3 + 2 delta)), clipped to N
  PointSet south_west;
  PointSet north_east;
};

/// SW = [1, side]^2 and its mirror NE = [N - side + 1, N]^2.
CornerSets corner_sets(int n, double delta);

/// Outer boundary layers of the corners, by the adjacency definition, split
/// into the right/top parts of the SW frame and left/bottom parts of the NE
/// frame. Points outside [1, N]^2 are dropped.
struct FrameSets {
  int k = 0;  // side + 1
  PointSet sw_right;
  PointSet sw_top;
  PointSet ne_left;
  PointSet ne_bottom;

  PointSet south_west() const;
  PointSet north_east() const;
};
FrameSets frame_sets(int n, double delta);

/// Maximum with start in the SW corner and end in the NE corner.
MaxFreeEnergyResult max_free_energy_corners(const WeightField& field, double delta, int threads = 1);

/// Hexagon with vertices p, p + (a,0), q - (0,a), q, q - (a,0), p + (0,a).
struct Hexagon {
  LatticePoint p;
  LatticePoint q;
  double a = 0.0;

  /// Throws std::invalid_argument unless p <= q and min side >= a >= 0.
  void validate() const;
  bool contains(int x, int y) const;
};

/// log of the path sum restricted to paths whose vertices all lie in the
/// hexagon; -inf when no such path exists.
double log_partition_hexagon(const WeightField& field, const Hexagon& hex);

/// Maximum over k disjoint diagonal hexagons H(P_i; Q_i; K - 1) with
/// P_i = (1, 1 + 2K(i-1)), Q_i = (M, M + 2K(i-1)), M = floor(N/2),
/// K = floor(M^(3/4)), k = floor(N^(1/8)).
struct CriticalLowerBound {
  double value = kNegInf;
  int m = 0;
  int big_k = 0;
  int k = 0;
  std::vector<Hexagon> hexagons;
  std::vector<double> strip_values;
};
CriticalLowerBound critical_lower_bound_statistic(const WeightField& field);

/// (log Z(1,1;M,N) + M h(N/M)) / (M^(1/3) sigma(N/M)) with theta = field.theta.
double rescaled_free_energy(const WeightField& field, int m, int n);

/// Rescaled profile sampled at x = j / N^(2/3), linearly interpolated between
/// lattice x-values.
struct ProfileCurve {
  double t = 0.0;
  std::vector<double> xs;
  std::vector<double> values;

  double operator()(double x) const;
};
ProfileCurve profile_f_lg(const WeightField& field, int n, double r, double t);

}  // namespace lgp

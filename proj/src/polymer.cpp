#include "lgpolymer/polymer.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <tuple>

#include "lgpolymer/parallel.hpp"

namespace lgp {

namespace {

void require_inside(const WeightField& field, LatticePoint p, const char* who) {
  if (!field.contains(p.x, p.y)) {
    throw std::out_of_range(std::string(who) + ": point outside the field");
  }
}

// Row sweep of log Z(start; .) over [start, bound], cells rejected by `admit`
// forced to -inf.
template <typename Admit>
RowMatrix log_sweep(const WeightField& field, LatticePoint start, LatticePoint bound, Admit&& admit) {
  RowMatrix z = RowMatrix::Constant(field.rows, field.cols, kNegInf);
  for (int x = start.x; x <= bound.x; ++x) {
    for (int y = start.y; y <= bound.y; ++y) {
      if (!admit(x, y)) continue;
      const double lw = field.log_weight(x, y);
      if (x == start.x && y == start.y) {
        z(x - 1, y - 1) = lw;
        continue;
      }
      const double from_x = x > start.x ? z(x - 2, y - 1) : kNegInf;
      const double from_y = y > start.y ? z(x - 1, y - 2) : kNegInf;
      const double s = log_add(from_x, from_y);
      z(x - 1, y - 1) = s == kNegInf ? kNegInf : lw + s;
    }
  }
  return z;
}

struct Candidate {
  double value = kNegInf;
  LatticePoint start;
  LatticePoint end;
};

// Larger value wins; equal values go to the lexicographically smaller pair.
bool better(const Candidate& a, const Candidate& b) {
  if (a.value != b.value) return a.value > b.value;
  return std::tie(a.start, a.end) < std::tie(b.start, b.end);
}

// exp(log w) laid out by anti-diagonal D = x + y, x ascending within each.
class DiagonalWeights {
 public:
  explicit DiagonalWeights(const WeightField& field) : rows_(field.rows), cols_(field.cols) {
    const int dmax = rows_ + cols_;
    offset_.assign(static_cast<std::size_t>(dmax + 1), 0);
    std::size_t total = 0;
    for (int d = 2; d <= dmax; ++d) {
      offset_[d] = total;
      total += static_cast<std::size_t>(xmax(d) - xmin(d) + 1);
    }
    data_.resize(total);
    for (int d = 2; d <= dmax; ++d) {
      for (int x = xmin(d); x <= xmax(d); ++x) {
        data_[offset_[d] + static_cast<std::size_t>(x - xmin(d))] = std::exp(field.log_weight(x, d - x));
      }
    }
  }

  const double* at(int d, int x) const { return data_.data() + offset_[d] + static_cast<std::size_t>(x - xmin(d)); }

 private:
  int xmin(int d) const { return std::max(1, d - cols_); }
  int xmax(int d) const { return std::min(rows_, d - 1); }

  int rows_;
  int cols_;
  std::vector<std::size_t> offset_;
  std::vector<double> data_;
};

constexpr double kFlushBelow = 1e-280;

// Linear-space anti-diagonal sweep from `start` over [start, bound]. After
// each diagonal the values are divided by their maximum, so the stored value
// v at local index a means Z = v * exp(scale). visit(d, lo, hi, values,
// argmax, scale) sees values[a + 1] for a in [lo, hi].
template <typename Visit>
void scaled_sweep(const DiagonalWeights& w, LatticePoint start, LatticePoint bound,
                  std::vector<double>& prev, std::vector<double>& cur, Visit&& visit) {
  const int na = bound.x - start.x + 1;
  const int nb = bound.y - start.y + 1;
  prev.assign(static_cast<std::size_t>(na + 1), 0.0);
  cur.assign(static_cast<std::size_t>(na + 1), 0.0);
  double scale = 0.0;
  for (int d = 0; d <= na + nb - 2; ++d) {
    const int lo = std::max(0, d - (nb - 1));
    const int hi = std::min(d, na - 1);
    const double* wd = w.at(start.x + start.y + d, start.x + lo);
    double* __restrict out = cur.data() + 1;
    const double* __restrict in = prev.data();
    if (d == 0) {
      out[0] = wd[0];
    } else {
      out[lo - 1] = 0.0;
      for (int a = lo; a <= hi; ++a) out[a] = wd[a - lo] * (in[a] + in[a + 1]);
    }
    double m = 0.0;
    int arg = lo;
    for (int a = lo; a <= hi; ++a) {
      if (out[a] > m) {
        m = out[a];
        arg = a;
      }
    }
    const double inv = 1.0 / m;
    for (int a = lo; a <= hi; ++a) {
      const double v = out[a] * inv;
      out[a] = v < kFlushBelow ? 0.0 : v;
    }
    out[arg] = 1.0;
    scale += std::log(m);
    visit(d, lo, hi, static_cast<const double*>(out), arg, scale);
    std::swap(prev, cur);
  }
}

bool weights_in_linear_range(const WeightField& field) {
  return field.log_weights.cwiseAbs().maxCoeff() < 600.0;
}

MaxFreeEnergyResult to_result(const Candidate& c, FreeEnergyMode mode, double delta = 0.0) {
  MaxFreeEnergyResult r;
  r.value = c.value;
  r.arg_start = c.start;
  r.arg_end = c.end;
  r.mode = mode;
  r.delta = delta;
  return r;
}

Candidate reduce(const std::vector<Candidate>& cands) {
  Candidate best;
  bool any = false;
  for (const auto& c : cands) {
    if (c.value == kNegInf) continue;
    if (!any || better(c, best)) {
      best = c;
      any = true;
    }
  }
  return best;
}

}  // namespace

std::string to_string(FreeEnergyMode mode) {
  switch (mode) {
    case FreeEnergyMode::exact:
      return "exact";
    case FreeEnergyMode::corner_restricted:
      return "corner_restricted";
    case FreeEnergyMode::restricted:
      return "restricted";
  }
  return "unknown";
}

double log_partition(const WeightField& field, LatticePoint start, LatticePoint end) {
  require_inside(field, start, "log_partition");
  require_inside(field, end, "log_partition");
  if (!precedes(start, end)) throw std::invalid_argument("log_partition: start must precede end");
  // Only the row buffer is needed for a single end point.
  std::vector<double> row(static_cast<std::size_t>(end.y - start.y + 1), kNegInf);
  for (int x = start.x; x <= end.x; ++x) {
    double left = kNegInf;
    for (int y = start.y; y <= end.y; ++y) {
      auto& cell = row[static_cast<std::size_t>(y - start.y)];
      const double lw = field.log_weight(x, y);
      if (x == start.x && y == start.y) {
        cell = lw;
      } else {
        cell = lw + log_add(cell, left);
      }
      left = cell;
    }
  }
  return row.back();
}

LogZGrid log_partition_grid(const WeightField& field, LatticePoint start) {
  require_inside(field, start, "log_partition_grid");
  return {start, log_sweep(field, start, {field.rows, field.cols}, [](int, int) { return true; })};
}

namespace {

// The scaled sweeps locate the maximiser; its value is recomputed by one
// log-space sweep so that it matches log_partition to the last bit.
MaxFreeEnergyResult polished(const WeightField& field, MaxFreeEnergyResult r) {
  if (!r.empty()) r.value = log_partition(field, r.arg_start, r.arg_end);
  return r;
}

}  // namespace

MaxFreeEnergyResult max_free_energy_log_space(const WeightField& field) {
  if (!field.is_square()) throw std::invalid_argument("max_free_energy: field must be square");
  Candidate best;
  for (int sx = 1; sx <= field.rows; ++sx) {
    for (int sy = 1; sy <= field.cols; ++sy) {
      const LogZGrid g = log_partition_grid(field, {sx, sy});
      for (int x = sx; x <= field.rows; ++x) {
        for (int y = sy; y <= field.cols; ++y) {
          Candidate c{g.values(x - 1, y - 1), {sx, sy}, {x, y}};
          if (best.value == kNegInf || better(c, best)) best = c;
        }
      }
    }
  }
  return to_result(best, FreeEnergyMode::exact);
}

MaxFreeEnergyResult max_free_energy_exact(const WeightField& field, const ExactOptions& options) {
  if (!field.is_square()) throw std::invalid_argument("max_free_energy_exact: field must be square");
  if (field.rows > options.max_n) {
    throw std::length_error("max_free_energy_exact: N exceeds the exact-mode limit");
  }
  if (!weights_in_linear_range(field)) return max_free_energy_log_space(field);

  const int n = field.rows;
  const DiagonalWeights w(field);
  std::vector<Candidate> per_start(static_cast<std::size_t>(n) * n);
  parallel_for(per_start.size(), options.threads, [&](std::size_t idx) {
    const LatticePoint s{static_cast<int>(idx / n) + 1, static_cast<int>(idx % n) + 1};
    thread_local std::vector<double> prev, cur;
    Candidate best{kNegInf, s, s};
    scaled_sweep(w, s, {n, n}, prev, cur, [&](int d, int, int, const double*, int arg, double scale) {
      const LatticePoint end{s.x + arg, s.y + d - arg};
      if (scale > best.value || (scale == best.value && end < best.end)) {
        best.value = scale;
        best.end = end;
      }
    });
    per_start[idx] = best;
  });
  return polished(field, to_result(reduce(per_start), FreeEnergyMode::exact));
}

MaxFreeEnergyResult max_free_energy_restricted(const WeightField& field, std::span<const LatticePoint> k1,
                                               std::span<const LatticePoint> k2, int threads) {
  for (auto p : k1) require_inside(field, p, "max_free_energy_restricted");
  for (auto p : k2) require_inside(field, p, "max_free_energy_restricted");

  PointSet starts(k1.begin(), k1.end());
  std::sort(starts.begin(), starts.end());
  starts.erase(std::unique(starts.begin(), starts.end()), starts.end());

  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> allowed =
      Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Constant(field.rows, field.cols, false);
  LatticePoint bound{1, 1};
  for (auto p : k2) {
    allowed(p.x - 1, p.y - 1) = true;
    bound.x = std::max(bound.x, p.x);
    bound.y = std::max(bound.y, p.y);
  }

  std::optional<DiagonalWeights> w;
  if (weights_in_linear_range(field)) w.emplace(field);
  std::vector<Candidate> per_start(starts.size());
  parallel_for(starts.size(), threads, [&](std::size_t idx) {
    const LatticePoint s = starts[idx];
    Candidate best{kNegInf, s, s};
    if (s.x > bound.x || s.y > bound.y) {
      per_start[idx] = best;
      return;
    }
    auto offer = [&](double value, LatticePoint end) {
      if (value > best.value || (value == best.value && value != kNegInf && end < best.end)) {
        best.value = value;
        best.end = end;
      }
    };
    bool flushed_only = false;
    if (w) {
      thread_local std::vector<double> prev, cur;
      bool admissible = false;
      scaled_sweep(*w, s, bound, prev, cur, [&](int d, int lo, int hi, const double* v, int, double scale) {
        for (int a = lo; a <= hi; ++a) {
          const LatticePoint end{s.x + a, s.y + d - a};
          if (!allowed(end.x - 1, end.y - 1)) continue;
          admissible = true;
          if (v[a] != 0.0) offer(std::log(v[a]) + scale, end);
        }
      });
      // Every admissible end fell below the flush threshold of its diagonal.
      flushed_only = admissible && best.value == kNegInf;
    }
    if (!w || flushed_only) {
      const RowMatrix z = log_sweep(field, s, bound, [](int, int) { return true; });
      for (int x = s.x; x <= bound.x; ++x) {
        for (int y = s.y; y <= bound.y; ++y) {
          if (allowed(x - 1, y - 1)) offer(z(x - 1, y - 1), {x, y});
        }
      }
    }
    per_start[idx] = best;
  });
  Candidate best = reduce(per_start);
  return polished(field, to_result(best, FreeEnergyMode::restricted));
}

CornerSets corner_sets(int n, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 3.0)) throw std::domain_error("corner_sets: delta must lie in (0, 1/3)");
  if (n < 1) throw std::domain_error("corner_sets: N must be positive");
  CornerSets c;
  const double s = std::pow(static_cast<double>(n), 1.0 / 3.0 + 2.0 * delta);
  c.side = std::min(n, static_cast<int>(std::floor(s + 1e-9)));
  for (int x = 1; x <= c.side; ++x) {
    for (int y = 1; y <= c.side; ++y) {
      c.south_west.push_back({x, y});
      c.north_east.push_back({n - c.side + x, n - c.side + y});
    }
  }
  return c;
}

PointSet FrameSets::south_west() const {
  PointSet out = sw_right;
  out.insert(out.end(), sw_top.begin(), sw_top.end());
  std::sort(out.begin(), out.end());
  return out;
}

PointSet FrameSets::north_east() const {
  PointSet out = ne_left;
  out.insert(out.end(), ne_bottom.begin(), ne_bottom.end());
  std::sort(out.begin(), out.end());
  return out;
}

FrameSets frame_sets(int n, double delta) {
  const CornerSets c = corner_sets(n, delta);
  const int side = c.side;
  auto in_sw = [&](int x, int y) { return x >= 1 && y >= 1 && x <= side && y <= side; };
  auto in_ne = [&](int x, int y) { return x > n - side && y > n - side && x <= n && y <= n; };
  FrameSets f;
  f.k = side + 1;
  // Adjacency definition, scanned over the field.
  for (int x = 1; x <= n; ++x) {
    for (int y = 1; y <= n; ++y) {
      if (!in_sw(x, y) && (in_sw(x - 1, y) || in_sw(x, y - 1))) {
        (x == f.k ? f.sw_right : f.sw_top).push_back({x, y});
      }
      if (!in_ne(x, y) && (in_ne(x + 1, y) || in_ne(x, y + 1))) {
        (x == n - f.k + 1 ? f.ne_left : f.ne_bottom).push_back({x, y});
      }
    }
  }
  return f;
}

MaxFreeEnergyResult max_free_energy_corners(const WeightField& field, double delta, int threads) {
  if (!field.is_square()) throw std::invalid_argument("max_free_energy_corners: field must be square");
  const CornerSets c = corner_sets(field.rows, delta);
  MaxFreeEnergyResult r = max_free_energy_restricted(field, c.south_west, c.north_east, threads);
  r.mode = FreeEnergyMode::corner_restricted;
  r.delta = delta;
  return r;
}

void Hexagon::validate() const {
  if (!precedes(p, q)) throw std::invalid_argument("Hexagon: p must precede q");
  if (!(a >= 0.0) || !std::isfinite(a)) throw std::invalid_argument("Hexagon: a must be non-negative");
  if (std::min(q.x - p.x, q.y - p.y) < a) throw std::invalid_argument("Hexagon: min side shorter than a");
}

bool Hexagon::contains(int x, int y) const {
  if (x < p.x || x > q.x || y < p.y || y > q.y) return false;
  constexpr double tol = 1e-12;
  const double u = x - p.x;
  const double v = y - p.y;
  const double w = q.x - p.x;
  const double h = q.y - p.y;
  // Lower edge (a, 0) -> (w, h - a): the point must be on its upper-left side.
  const double lower = (w - a) * v - (h - a) * (u - a);
  // Upper edge (w - a, h) -> (0, a): the point must be on its lower-right side.
  const double upper = (w - a) * (v - a) - (h - a) * u;
  return lower >= -tol && upper <= tol;
}

double log_partition_hexagon(const WeightField& field, const Hexagon& hex) {
  hex.validate();
  require_inside(field, hex.p, "log_partition_hexagon");
  require_inside(field, hex.q, "log_partition_hexagon");
  const RowMatrix z = log_sweep(field, hex.p, hex.q, [&](int x, int y) { return hex.contains(x, y); });
  return z(hex.q.x - 1, hex.q.y - 1);
}

namespace {

// Largest r >= 0 with r^power <= value.
std::int64_t integer_root(std::int64_t value, int power) {
  auto pow_le = [&](std::int64_t r) {
    std::int64_t acc = 1;
    for (int i = 0; i < power; ++i) {
      if (acc > value / std::max<std::int64_t>(r, 1)) return false;
      acc *= r;
    }
    return acc <= value;
  };
  std::int64_t r = static_cast<std::int64_t>(std::pow(static_cast<double>(value), 1.0 / power));
  while (r > 0 && !pow_le(r)) --r;
  while (pow_le(r + 1)) ++r;
  return r;
}

}  // namespace

CriticalLowerBound critical_lower_bound_statistic(const WeightField& field) {
  if (!field.is_square()) throw std::invalid_argument("critical_lower_bound_statistic: field must be square");
  const int n = field.rows;
  CriticalLowerBound out;
  out.m = n / 2;
  if (out.m < 1) throw std::length_error("critical_lower_bound_statistic: N too small");
  const std::int64_t m = out.m;
  out.big_k = static_cast<int>(integer_root(m * m * m, 4));  // floor(M^(3/4))
  out.k = static_cast<int>(integer_root(n, 8));               // floor(N^(1/8))
  for (int i = 1; i <= out.k; ++i) {
    const int shift = 2 * out.big_k * (i - 1);
    Hexagon hex{{1, 1 + shift}, {out.m, out.m + shift}, static_cast<double>(out.big_k - 1)};
    if (!field.contains(hex.q.x, hex.q.y)) {
      throw std::length_error("critical_lower_bound_statistic: hexagon strips do not fit in the field");
    }
    out.hexagons.push_back(hex);
  }
  // Each weight may belong to at most one hexagon.
  for (int x = 1; x <= n; ++x) {
    for (int y = 1; y <= n; ++y) {
      int owners = 0;
      for (const auto& hex : out.hexagons) owners += hex.contains(x, y) ? 1 : 0;
      if (owners > 1) throw std::logic_error("critical_lower_bound_statistic: hexagon strips overlap");
    }
  }
  for (const auto& hex : out.hexagons) {
    const double v = log_partition_hexagon(field, hex);
    out.strip_values.push_back(v);
    out.value = std::max(out.value, v);
  }
  return out;
}

double rescaled_free_energy(const WeightField& field, int m, int n) {
  if (!(n >= 1 && n <= m)) throw std::domain_error("rescaled_free_energy: need 1 <= N <= M");
  if (m > field.rows || n > field.cols) throw std::out_of_range("rescaled_free_energy: (M, N) outside the field");
  const ScaleFunctions sf(field.theta);
  const double ratio = static_cast<double>(n) / m;
  const double log_z = log_partition(field, {1, 1}, {m, n});
  return (log_z + m * sf.h(ratio)) / (std::cbrt(static_cast<double>(m)) * sf.sigma_x(ratio));
}

double ProfileCurve::operator()(double x) const {
  if (!(x >= -t - 1e-12 && x <= t + 1e-12)) throw std::domain_error("ProfileCurve: x outside [-T, T]");
  const auto it = std::upper_bound(xs.begin(), xs.end(), x);
  if (it == xs.begin()) return values.front();
  if (it == xs.end()) return values.back();
  const auto i = static_cast<std::size_t>(it - xs.begin());
  const double lam = (x - xs[i - 1]) / (xs[i] - xs[i - 1]);
  return (1.0 - lam) * values[i - 1] + lam * values[i];
}

ProfileCurve profile_f_lg(const WeightField& field, int n, double r, double t) {
  if (n < 1 || !(r > 0.0) || !(t > 0.0)) throw std::domain_error("profile_f_lg: need N >= 1, r > 0, T > 0");
  const double n23 = std::pow(static_cast<double>(n), 2.0 / 3.0);
  if (!(r * n >= 2.0 + t * n23)) throw std::domain_error("profile_f_lg: need rN >= 2 + T N^(2/3)");
  const int base = static_cast<int>(std::floor(r * n));
  const int j_lo = static_cast<int>(std::ceil(-(t * n23) - 1.0 - 1e-12));
  const int j_hi = static_cast<int>(std::floor(t * n23 + 1.0 + 1e-12));
  if (base + j_hi > field.rows || n > field.cols || base + j_lo < 1) {
    throw std::out_of_range("profile_f_lg: field too small for the requested window");
  }
  const ScaleFunctions sf(field.theta);
  const double hr = sf.h(r);
  const double dhr = sf.h_prime(r);
  const LogZGrid grid = log_partition_grid(field, {1, 1});
  ProfileCurve curve;
  curve.t = t;
  const double n13 = std::cbrt(static_cast<double>(n));
  for (int j = j_lo; j <= j_hi; ++j) {
    const double x = j / n23;
    const double log_z = grid.at({base + j, n});
    curve.xs.push_back(x);
    curve.values.push_back((log_z + hr * n + dhr * x * n23) / n13);
  }
  return curve;
}

}  // namespace lgp

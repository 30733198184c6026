#include "mldp/conditions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mldp/errors.hpp"
#include "mldp/parallel.hpp"
#include "mldp/random.hpp"

namespace mldp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Norms and pairings for one choice of (V, H, V*).
class Geometry {
 public:
  Geometry(const DiscreteTriple& t, bool negative_sobolev, double alpha)
      : t_(t), negative_(negative_sobolev), alpha_(alpha), neg_lap_(t.dim()) {
    const double inv_h2 = 1.0 / (t.h() * t.h());
    for (std::size_t i = 0; i < t.dim(); ++i) {
      neg_lap_.diag[i] = 2.0 * inv_h2;
      if (i + 1 < t.dim()) {
        neg_lap_.lower[i] = -inv_h2;
        neg_lap_.upper[i] = -inv_h2;
      }
    }
  }

  bool negative() const { return negative_; }
  double alpha() const { return alpha_; }

  // (−Δ_h)^{-1} f
  std::vector<double> green(std::span<const double> f) const {
    std::vector<double> out(f.size());
    neg_lap_.solve(f, out);
    return out;
  }

  // V*–V duality, which restricted to H is the H-inner product.
  double pair(std::span<const double> f, std::span<const double> w) const {
    if (!negative_) return h_inner(t_, f, w);
    return h_inner(t_, green(f), w);
  }

  double h_sq(std::span<const double> u) const { return pair(u, u); }

  double v_pow(std::span<const double> u) const {
    if (!negative_) return v_norm_pow(t_, u, alpha_);
    double s = 0.0;
    for (double x : u) s += std::pow(std::abs(x), alpha_);
    return t_.h() * s;
  }

  double v_norm(std::span<const double> u) const { return std::pow(v_pow(u), 1.0 / alpha_); }

  double dual_norm(std::span<const double> f) const {
    const double q = alpha_ / (alpha_ - 1.0);
    const double h = t_.h();
    if (negative_) {
      const auto g = green(f);
      double s = 0.0;
      for (double x : g) s += std::pow(std::abs(x), q);
      return std::pow(h * s, 1.0 / q);
    }
    // ⟨f, w⟩ = Σ_c h·Q_c·∇w_c with Q_c = h Σ_{i≥c} f_i; gradients of Dirichlet
    // functions have zero mean, so the dual norm is min_k ‖Q − k‖_{L^q}.
    const std::size_t n = f.size();
    std::vector<double> Q(n + 1, 0.0);
    for (std::size_t c = n; c-- > 0;) Q[c] = Q[c + 1] + h * f[c];
    auto slope = [&](double k) {
      double s = 0.0;
      for (double x : Q) {
        const double d = x - k;
        s += std::copysign(std::pow(std::abs(d), q - 1.0), d);
      }
      return s;  // decreasing in k
    };
    double lo = *std::min_element(Q.begin(), Q.end());
    double hi = *std::max_element(Q.begin(), Q.end());
    for (int it = 0; it < 200 && hi - lo > 1e-15 * (1.0 + std::abs(hi)); ++it) {
      const double mid = 0.5 * (lo + hi);
      (slope(mid) > 0.0 ? lo : hi) = mid;
    }
    const double k = 0.5 * (lo + hi);
    double s = 0.0;
    for (double x : Q) s += std::pow(std::abs(x - k), q);
    return std::pow(h * s, 1.0 / q);
  }

  // Squared Hilbert–Schmidt norm of the difference of two noise operators.
  double hs_diff_sq(const NoiseSpec& noise, double t, std::span<const double> v1,
                    std::span<const double> v2) const {
    std::vector<double> c1(t_.dim()), c2(t_.dim());
    double s = 0.0;
    for (std::size_t j = 0; j < noise.modes(); ++j) {
      noise_column_into(noise, t_, t, v1, j, c1);
      if (!v2.empty()) {
        noise_column_into(noise, t_, t, v2, j, c2);
        for (std::size_t i = 0; i < c1.size(); ++i) c1[i] -= c2[i];
      }
      s += h_sq(c1);
    }
    return s;
  }

  // ‖e_k‖²_H for the normalized sine mode k
  double mode_weight(std::size_t k) const {
    return negative_ ? 1.0 / -t_.laplacian_eigenvalue(k) : 1.0;
  }

 private:
  const DiscreteTriple& t_;
  bool negative_;
  double alpha_;
  Tridiagonal neg_lap_;
};

bool uses_negative_sobolev(DriftFamily f) {
  return f == DriftFamily::porous_media || f == DriftFamily::fast_diffusion;
}

struct SampleDraw {
  double t = 0.0;
  std::vector<double> v1, v2, w;
};

SampleDraw draw_sample(const DiscreteTriple& triple, const ConditionOptions& opt, std::uint64_t seed,
                       std::size_t index) {
  const std::size_t n = triple.dim();
  const std::size_t levels = opt.amplitudes.size();
  const double a1 = opt.amplitudes[index % levels];
  const double a2 = opt.amplitudes[(index / levels) % levels];
  const std::uint64_t s = derive_seed(seed, index, 0xC0DEu);

  SampleDraw d;
  std::vector<double> buf(3 * n + 1);
  fill_normal(s, 1.0, std::span<double>(buf).first(3 * n));
  std::vector<double> u(1);
  fill_uniform(derive_seed(s, 1), u);
  d.t = u[0] * opt.horizon;
  d.v1.resize(n);
  d.v2.resize(n);
  d.w.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    d.v1[i] = a1 * buf[i];
    d.v2[i] = d.v1[i] + a2 * buf[n + i];
    d.w[i] = buf[2 * n + i];
  }
  return d;
}

struct SampleResult {
  double delta_a2 = kInf;        // largest δ passing (A2) on this pair
  double excess_a2p = -kInf;     // relative violation of the monotone half of (A2')
  double delta_coercive = kInf;  // largest δ passing the coercive half of (A2')
  double growth_ratio = 0.0;     // (‖A(v)‖_{V*} + ‖B(v)‖_{L(U,V*)}) / (1 + ‖v‖_V^{α−1})
  bool hemicontinuity_flag = false;
  std::vector<double> a4_residual;  // ‖P_n B − B‖₂ for n = 1..dim
};

SampleResult evaluate_sample(const DriftSpec& drift, const NoiseSpec& noise, const DiscreteTriple& triple,
                             const Geometry& geo, const ConditionOptions& opt, const SampleDraw& d) {
  const std::size_t n = triple.dim();
  const double K = drift.declared_K;
  SampleResult res;

  std::vector<double> a1(n), a2(n), e(n), da(n);
  drift_apply_into(drift, triple, d.t, d.v1, a1);
  drift_apply_into(drift, triple, d.t, d.v2, a2);
  for (std::size_t i = 0; i < n; ++i) {
    e[i] = d.v1[i] - d.v2[i];
    da[i] = a1[i] - a2[i];
  }

  // (A2) and the monotone half of (A2')
  const double pairing = 2.0 * geo.pair(da, e);
  const double hs_diff = geo.hs_diff_sq(noise, d.t, d.v1, d.v2);
  const double e_h = geo.h_sq(e);
  const double e_v = geo.v_pow(e);
  const double lhs = pairing + hs_diff - K * e_h;
  if (e_v > 0.0) res.delta_a2 = -lhs / e_v;
  const double scale = std::abs(pairing) + hs_diff + K * e_h + std::numeric_limits<double>::min();
  res.excess_a2p = lhs / scale;

  // coercive half of (A2'): 2⟨A(v),v⟩ + ‖B(v)‖² + δ‖v‖_V^α ≤ K(1 + ‖v‖_H²)
  const double v_h = geo.h_sq(d.v1);
  const double v_v = geo.v_pow(d.v1);
  const double coercive = 2.0 * geo.pair(a1, d.v1) + geo.hs_diff_sq(noise, d.t, d.v1, {}) - K * (1.0 + v_h);
  if (v_v > 0.0) res.delta_coercive = -coercive / v_v;

  // (A3) growth
  double b_dual = 0.0;
  std::vector<double> col(n);
  for (std::size_t j = 0; j < noise.modes(); ++j) {
    noise_column_into(noise, triple, d.t, d.v1, j, col);
    const double c = geo.dual_norm(col);
    b_dual += c * c;
  }
  const double v_norm_v = std::pow(v_v, 1.0 / geo.alpha());
  res.growth_ratio = (geo.dual_norm(a1) + std::sqrt(b_dual)) / (1.0 + std::pow(v_norm_v, geo.alpha() - 1.0));

  // (A1) on s ↦ ⟨A(t, v1 + s·(v2 − v1)), w⟩
  const int pts = std::max(3, opt.hemicontinuity_points);
  std::vector<double> f(pts), shifted(n), as(n);
  double fmax = 0.0;
  for (int k = 0; k < pts; ++k) {
    const double s = -1.0 + 2.0 * k / (pts - 1);
    for (std::size_t i = 0; i < n; ++i) shifted[i] = d.v1[i] - s * e[i];
    drift_apply_into(drift, triple, d.t, shifted, as);
    f[k] = geo.pair(as, d.w);
    fmax = std::max(fmax, std::abs(f[k]));
  }
  for (int k = 0; k + 1 < pts; ++k) {
    const double jump = std::abs(f[k + 1] - f[k]);
    const double left = k > 0 ? std::abs(f[k] - f[k - 1]) : 0.0;
    const double right = k + 2 < pts ? std::abs(f[k + 2] - f[k + 1]) : 0.0;
    if (jump > 1e-8 * (1.0 + fmax) && jump > opt.jump_factor * std::max(left, right)) {
      res.hemicontinuity_flag = true;
    }
  }

  // (A4): residual of P_n on every column via the sine expansion
  std::vector<double> tail(n + 1, 0.0);
  for (std::size_t j = 0; j < noise.modes(); ++j) {
    noise_column_into(noise, triple, d.t, d.v1, j, col);
    for (std::size_t k = n; k >= 1; --k) {
      const double c = h_inner(triple, col, triple.sine_mode(k));
      tail[k - 1] += c * c * geo.mode_weight(k);
    }
  }
  for (std::size_t k = n; k-- > 0;) tail[k] += tail[k + 1];  // tail[k] = Σ_{modes > k}
  res.a4_residual.resize(n);
  for (std::size_t m = 1; m <= n; ++m) res.a4_residual[m - 1] = std::sqrt(tail[m]);
  return res;
}

}  // namespace

const ConditionEntry& ConditionReport::entry(const std::string& id) const {
  for (const auto& e : entries) {
    if (e.id == id) return e;
  }
  throw std::out_of_range("no condition entry " + id);
}

ConditionReport verify_conditions(const DriftSpec& drift, const NoiseSpec& noise, const DiscreteTriple& triple,
                                  int n_samples, std::uint64_t seed, const ConditionOptions& options,
                                  const WorkerPool* pool) {
  if (n_samples < 1) throw ConfigError("verify_conditions: n_samples must be >= 1");
  if (options.amplitudes.empty()) throw ConfigError("verify_conditions: no amplitude levels");
  validate(drift);
  validate(noise, triple);

  const bool negative = uses_negative_sobolev(drift.family);
  const Geometry geo(triple, negative, drift.declared_alpha);
  const auto count = static_cast<std::size_t>(n_samples);

  std::vector<SampleResult> results(count);
  auto body = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      results[i] = evaluate_sample(drift, noise, triple, geo, options, draw_sample(triple, options, seed, i));
    }
  };
  if (pool) {
    pool->for_ranges(count, 16, body);
  } else {
    body(0, count);
  }

  // reduce in index order
  std::size_t arg_a2 = 0, arg_a2p = 0, arg_coercive = 0, arg_growth = 0, arg_a1 = count;
  std::vector<double> decay(triple.dim(), 0.0);
  for (std::size_t i = 0; i < count; ++i) {
    const auto& r = results[i];
    if (r.delta_a2 < results[arg_a2].delta_a2) arg_a2 = i;
    if (r.excess_a2p > results[arg_a2p].excess_a2p) arg_a2p = i;
    if (r.delta_coercive < results[arg_coercive].delta_coercive) arg_coercive = i;
    if (r.growth_ratio > results[arg_growth].growth_ratio) arg_growth = i;
    if (r.hemicontinuity_flag && arg_a1 == count) arg_a1 = i;
    for (std::size_t k = 0; k < decay.size(); ++k) decay[k] = std::max(decay[k], r.a4_residual[k]);
  }

  auto witness = [&](ConditionEntry& e, std::size_t idx) {
    const auto d = draw_sample(triple, options, seed, idx);
    e.witness_first = d.v1;
    e.witness_second = d.v2;
    e.constants["witness_index"] = static_cast<double>(idx);
    e.constants["witness_time"] = d.t;
  };

  ConditionReport report;
  report.family = to_string(drift.family);
  report.geometry = negative ? "H-1/La" : "L2/W1a";

  ConditionEntry a1;
  a1.id = "A1";
  a1.samples = count;
  a1.pass = arg_a1 == count;
  a1.constants["grid_points"] = options.hemicontinuity_points;
  a1.constants["jump_factor"] = options.jump_factor;
  if (!a1.pass) {
    witness(a1, arg_a1);
    a1.note = "jump along a line segment exceeds the jump factor";
  }
  report.entries.push_back(std::move(a1));

  const double slack = 1e-9;
  ConditionEntry a2;
  a2.id = "A2";
  a2.samples = count;
  a2.claimed = drift.claims_strong_monotonicity();
  const double delta_hat = results[arg_a2].delta_a2;
  a2.constants["delta_hat"] = delta_hat;
  a2.constants["declared_delta"] = drift.declared_delta;
  a2.constants["declared_K"] = drift.declared_K;
  a2.pass = delta_hat > 0.0 && delta_hat >= drift.declared_delta * (1.0 - slack);
  if (!a2.claimed) a2.note = "not claimed by this drift family";
  witness(a2, arg_a2);
  report.entries.push_back(std::move(a2));

  ConditionEntry a2p;
  a2p.id = "A2'";
  a2p.samples = count;
  const double excess = results[arg_a2p].excess_a2p;
  const double delta_coercive = results[arg_coercive].delta_coercive;
  a2p.constants["monotone_excess"] = excess;
  a2p.constants["delta_hat"] = delta_coercive;
  a2p.constants["declared_delta"] = drift.declared_delta;
  a2p.constants["declared_K"] = drift.declared_K;
  a2p.pass = excess <= slack && delta_coercive > 0.0 && delta_coercive >= drift.declared_delta * (1.0 - slack);
  witness(a2p, excess > slack ? arg_a2p : arg_coercive);
  report.entries.push_back(std::move(a2p));

  ConditionEntry a3;
  a3.id = "A3";
  a3.samples = count;
  const double k_hat = results[arg_growth].growth_ratio;
  std::vector<double> zero(triple.dim(), 0.0);
  const double b0 = hs_norm(noise, triple, 0.0, zero);
  a3.constants["K_hat"] = k_hat;
  a3.constants["declared_K"] = drift.declared_K;
  a3.constants["hs_norm_at_zero"] = b0;
  a3.pass = std::isfinite(b0) && std::isfinite(k_hat) && k_hat <= drift.declared_K * (1.0 + slack);
  witness(a3, arg_growth);
  report.entries.push_back(std::move(a3));

  ConditionEntry a4;
  a4.id = "A4";
  a4.samples = count;
  bool non_increasing = true;
  bool strictly = true;
  for (std::size_t k = 1; k < decay.size(); ++k) {
    if (decay[k] > decay[k - 1] * (1.0 + 1e-12)) non_increasing = false;
    if (!(decay[k] < decay[k - 1])) strictly = false;
  }
  const double final_residual = decay.empty() ? 0.0 : decay.back();
  a4.constants["final_residual"] = final_residual;
  a4.constants["tolerance"] = options.a4_tolerance;
  a4.constants["strictly_decreasing"] = strictly ? 1.0 : 0.0;
  a4.constants["hs_truncation_tail"] = hs_truncation_tail(noise);
  a4.pass = non_increasing && final_residual < options.a4_tolerance;
  report.entries.push_back(std::move(a4));

  report.a4_decay = std::move(decay);
  return report;
}

nlohmann::json to_json(const ConditionReport& report) {
  nlohmann::json j;
  j["family"] = report.family;
  j["geometry"] = report.geometry;
  j["conditions"] = nlohmann::json::array();
  for (const auto& e : report.entries) {
    nlohmann::json c;
    c["id"] = e.id;
    c["claimed"] = e.claimed;
    c["pass"] = e.pass;
    c["samples"] = e.samples;
    c["constants"] = nlohmann::json::object();
    for (const auto& [k, v] : e.constants) {
      c["constants"][k] = std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr);
    }
    if (!e.witness_first.empty()) {
      c["witness"] = {{"first", e.witness_first}, {"second", e.witness_second}};
    }
    if (!e.note.empty()) c["note"] = e.note;
    j["conditions"].push_back(std::move(c));
  }
  j["a4_decay"] = report.a4_decay;
  return j;
}

}  // namespace mldp

#include "genpol/schedules.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace genpol {
namespace {

constexpr double kHalfPi = std::numbers::pi / 2.0;

void require_diffusion(const PathSchedule& s, const char* what) {
  if (!s.is_diffusion())
    throw UnsupportedError(std::string(what) + " is undefined for the ICFM path (no scale/noise levels)");
}

// Per-row time lookup for a [B, 1] column or a broadcast scalar.
class TimeColumn {
 public:
  TimeColumn(const Tensor& t, std::size_t rows) : t_(t) {
    if (t.numel() != 1 && (t.rows() != rows || t.cols() != 1))
      throw ShapeError("time tensor " + shape_str(t.shape()) + " does not match " + std::to_string(rows) + " rows");
  }
  double operator[](std::size_t i) const { return t_.numel() == 1 ? t_[0] : t_[i]; }

 private:
  const Tensor& t_;
};

void require_same_shape(const Tensor& a, const Tensor& b, const char* what) {
  if (a.shape() != b.shape())
    throw ShapeError(std::string(what) + ": shape " + shape_str(a.shape()) + " vs " + shape_str(b.shape()));
}

template <class F>
Tensor rowwise(const Tensor& like, const Tensor& t, F f) {
  Tensor out(like.shape());
  const TimeColumn tc(t, like.rows());
  const std::size_t c = like.cols();
  for (std::size_t i = 0; i < like.rows(); ++i)
    for (std::size_t j = 0; j < c; ++j) out[i * c + j] = static_cast<Real>(f(tc[i], i * c + j));
  return out;
}

double checked_sigma(const PathSchedule& s, double t) {
  const double sigma = alpha_sigma(s, t).sigma;
  if (!(sigma >= kSigmaFloor))
    throw DomainError("sigma_t = " + std::to_string(sigma) + " below floor at t = " + std::to_string(t));
  return sigma;
}

}  // namespace

std::string to_string(PathKind kind) {
  switch (kind) {
    case PathKind::VPSDE: return "vpsde";
    case PathKind::GVP: return "gvp";
    case PathKind::ICFM: return "icfm";
  }
  return "?";
}

std::string to_string(Parameterization p) {
  switch (p) {
    case Parameterization::Velocity: return "velocity";
    case Parameterization::Noise: return "noise";
    case Parameterization::Score: return "score";
  }
  return "?";
}

PathKind parse_path_kind(const std::string& s) {
  if (s == "vpsde") return PathKind::VPSDE;
  if (s == "gvp") return PathKind::GVP;
  if (s == "icfm") return PathKind::ICFM;
  throw ConfigError("unknown schedule kind '" + s + "' (expected vpsde, gvp or icfm)");
}

Parameterization parse_parameterization(const std::string& s) {
  if (s == "velocity") return Parameterization::Velocity;
  if (s == "noise") return Parameterization::Noise;
  if (s == "score") return Parameterization::Score;
  throw ConfigError("unknown parameterization '" + s + "' (expected velocity, noise or score)");
}

double PathSchedule::clip(double t) const { return std::clamp(t, t_min(), t_max()); }

ScaleNoise alpha_sigma(const PathSchedule& s, double t) {
  require_diffusion(s, "alpha_sigma");
  if (!(t >= 0.0 && t <= 1.0)) throw DomainError("time " + std::to_string(t) + " outside [0, 1]");
  if (s.kind == PathKind::GVP) return {std::cos(kHalfPi * t), std::sin(kHalfPi * t)};
  // int_0^t beta_s ds for beta linear in s
  const double integral = s.beta_min * t + 0.5 * (s.beta_max - s.beta_min) * t * t;
  return {std::exp(-0.5 * integral), std::sqrt(-std::expm1(-integral))};
}

ScaleNoise alpha_sigma_dt(const PathSchedule& s, double t) {
  const auto [alpha, sigma] = alpha_sigma(s, t);
  if (s.kind == PathKind::GVP) return {-kHalfPi * sigma, kHalfPi * alpha};
  const double b = s.beta(t);
  // sigma' = d(1 - alpha^2)/dt / (2 sigma) = beta alpha^2 / (2 sigma)
  return {-0.5 * b * alpha, 0.5 * b * alpha * alpha / sigma};
}

DriftDiffusion drift_diffusion(const PathSchedule& s, double t) {
  require_diffusion(s, "drift_diffusion");
  const double tc = s.clip(t);
  DriftDiffusion out{};
  if (s.kind == PathKind::VPSDE) {
    const double b = s.beta(tc);
    out = {-0.5 * b, b};
  } else {
    const double tan_t = std::tan(kHalfPi * tc);
    out = {-kHalfPi * tan_t, std::numbers::pi * tan_t};
  }
  if (!std::isfinite(out.f) || !std::isfinite(out.g2))
    throw DomainError("drift/diffusion non-finite at t = " + std::to_string(t));
  return out;
}

PathPoint sample_path_point(const PathSchedule& s, const Tensor& x0, const Tensor& x1_or_noise, const Tensor& t,
                            Rng& rng) {
  require_same_shape(x0, x1_or_noise, "sample_path_point");
  if (s.is_diffusion()) {
    Tensor xt = rowwise(x0, t, [&](double ti, std::size_t k) {
      const auto [a, sg] = alpha_sigma(s, ti);
      return a * x0[k] + sg * x1_or_noise[k];
    });
    return {std::move(xt), x1_or_noise};
  }
  Tensor z(x0.shape());
  if (s.icfm_sigma > 0.0)
    for (auto& v : z.values()) v = static_cast<Real>(rng.normal());
  Tensor xt = rowwise(x0, t, [&](double ti, std::size_t k) {
    return ti * x1_or_noise[k] + (1.0 - ti) * x0[k] + s.icfm_sigma * z[k];
  });
  return {std::move(xt), std::move(z)};
}

Tensor target_score(const PathSchedule& s, const Tensor& x_t, const Tensor& x0, const Tensor& t) {
  require_diffusion(s, "target_score");
  require_same_shape(x_t, x0, "target_score");
  return rowwise(x_t, t, [&](double ti, std::size_t k) {
    const double sigma = checked_sigma(s, ti);
    const double alpha = alpha_sigma(s, ti).alpha;
    return -(x_t[k] - alpha * x0[k]) / (sigma * sigma);
  });
}

Tensor target_velocity(const PathSchedule& s, const Tensor& x0, const Tensor& x1_or_noise, const Tensor& t) {
  require_same_shape(x0, x1_or_noise, "target_velocity");
  if (!s.is_diffusion()) {
    Tensor v(x0.shape());
    for (std::size_t k = 0; k < v.numel(); ++k) v[k] = x1_or_noise[k] - x0[k];
    return v;
  }
  return rowwise(x0, t, [&](double ti, std::size_t k) {
    const auto [da, ds] = alpha_sigma_dt(s, ti);
    return da * x0[k] + ds * x1_or_noise[k];
  });
}

Tensor convert(Parameterization from, Parameterization to, const PathSchedule& s, const Tensor& x_t,
               const Tensor& t, const Tensor& value) {
  require_same_shape(x_t, value, "convert");
  if (from == to) return value;
  require_diffusion(s, "convert");
  return rowwise(value, t, [&](double t_raw, std::size_t k) {
    const double ti = s.clip(t_raw);
    const auto [f, g2] = drift_diffusion(s, ti);
    const double x = x_t[k];
    double score = 0.0;
    switch (from) {
      case Parameterization::Score: score = value[k]; break;
      case Parameterization::Noise: score = -value[k] / checked_sigma(s, ti); break;
      case Parameterization::Velocity: score = 2.0 * (f * x - value[k]) / g2; break;
    }
    switch (to) {
      case Parameterization::Score: return score;
      case Parameterization::Noise: return -checked_sigma(s, ti) * score;
      case Parameterization::Velocity: return f * x - 0.5 * g2 * score;
    }
    return 0.0;
  });
}

Var to_velocity(Parameterization from, const PathSchedule& s, const Var& x_t, const Tensor& t, const Var& value) {
  if (from == Parameterization::Velocity) return value;
  require_diffusion(s, "to_velocity");
  const std::size_t rows = x_t.rows();
  const TimeColumn tc(t, rows);
  Tensor drift({rows, 1});
  Tensor gain({rows, 1});
  for (std::size_t i = 0; i < rows; ++i) {
    const double ti = s.clip(tc[i]);
    const auto [f, g2] = drift_diffusion(s, ti);
    drift[i] = static_cast<Real>(f);
    // v = f x - g^2/2 * score; score = -noise / sigma
    gain[i] = static_cast<Real>(from == Parameterization::Score ? -0.5 * g2 : 0.5 * g2 / checked_sigma(s, ti));
  }
  return add(mul(x_t, drift), mul(value, gain));
}

}  // namespace genpol

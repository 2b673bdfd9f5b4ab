#include "strichartz/profiles.hpp"

#include <cmath>
#include <numbers>

#include "strichartz/error.hpp"

namespace strichartz {
namespace {

constexpr double kSqrt2 = std::numbers::sqrt2;

// sech(y) without overflow for large |y|.
double sech(double y) {
  const double e = std::exp(-std::abs(y));
  return 2.0 * e / (1.0 + e * e);
}

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

}  // namespace

double gaussian(double x) { return std::exp(-0.5 * std::numbers::pi * x * x); }

double gaussian2(double x1, double x2) { return std::exp(-0.5 * std::numbers::pi * (x1 * x1 + x2 * x2)); }

double soliton_q(double p, double s) {
  const double k = 1.0 / (p - 1.0);
  return std::pow(0.5 * (p + 1.0), k) * std::pow(sech(0.5 * (p - 1.0) * s), 2.0 * k);
}

double soliton(double p, double c, double x0, double x) {
  return std::pow(c, 1.0 / (p - 1.0)) * soliton_q(p, std::sqrt(c) * (x - x0));
}

double breather(double t, double x, double alpha, double beta, double x1, double x2) {
  const double gam = beta * (3.0 * alpha * alpha - beta * beta);
  const double del = alpha * (alpha * alpha - 3.0 * beta * beta);
  const double theta = alpha * x + del * t + x1;
  const double phi = beta * x + gam * t + x2;
  const double ratio = beta / alpha;
  const double s = sech(phi);
  const double sn = std::sin(theta);
  const double num = ratio * (alpha * std::cos(theta) - beta * sn * std::tanh(phi)) * s;
  const double den = 1.0 + ratio * ratio * sn * sn * s * s;
  return 2.0 * kSqrt2 * num / den;
}

double breather_limit(double alpha, double x) { return 2.0 * kSqrt2 * std::cos(alpha * x) * sech(x); }

double soliton_limit(double x) { return std::exp(-std::abs(x)); }

std::vector<double> hermite_fns(int n_max, double x) {
  if (n_max < 0 || n_max > kMaxHermiteDegree) throw InvalidArgument("Hermite degree must lie in [0, 60]");
  std::vector<double> f(static_cast<std::size_t>(n_max) + 1);
  f[0] = std::exp(-0.25 * x * x) / std::pow(2.0 * std::numbers::pi, 0.25);
  if (n_max >= 1) f[1] = x * f[0];
  for (int n = 1; n < n_max; ++n)
    f[n + 1] = (x * f[n] - std::sqrt(static_cast<double>(n)) * f[n - 1]) / std::sqrt(static_cast<double>(n + 1));
  return f;
}

double hermite_fn(int n, double x) { return hermite_fns(n, x).back(); }

double hermite_sum(const std::vector<double>& coeffs, double x) {
  if (coeffs.empty()) throw InvalidArgument("Hermite coefficient list is empty");
  const auto f = hermite_fns(static_cast<int>(coeffs.size()) - 1, x);
  double sum = 0.0;
  for (std::size_t n = 0; n < coeffs.size(); ++n) sum += coeffs[n] * f[n];
  return sum;
}

double modified_gaussian(const profile::ModifiedGaussian& m, double x) {
  const double x2 = x * x;
  return m.A * std::exp(m.a * x2) + m.B * x2 * std::exp(m.b * x2) + m.C * x2 * x2 * std::exp(m.c * x2);
}

void validate(const ProfileSpec& spec) {
  std::visit(overloaded{
                 [](const profile::Gaussian&) {},
                 [](const profile::SolitonLimit&) {},
                 [](const profile::Soliton& s) {
                   if (!(s.p >= 2.0)) throw InvalidArgument("soliton requires p >= 2");
                   if (!(s.c > 0.0)) throw InvalidArgument("soliton requires c > 0");
                 },
                 [](const profile::Breather& b) {
                   if (!(b.alpha > 0.0) || !(b.beta > 0.0))
                     throw InvalidArgument("breather requires alpha > 0 and beta > 0");
                 },
                 [](const profile::BreatherLimit& b) {
                   if (!(b.alpha > 0.0)) throw InvalidArgument("breather limit requires alpha > 0");
                 },
                 [](const profile::HermiteSum& h) {
                   if (h.coeffs.empty()) throw InvalidArgument("Hermite coefficient list is empty");
                   if (h.coeffs.size() > kMaxHermiteDegree + 1)
                     throw InvalidArgument("at most 61 Hermite coefficients are supported");
                 },
                 [](const profile::ModifiedGaussian& m) {
                   if (!(m.a < 0.0) || !(m.b < 0.0) || !(m.c < 0.0))
                     throw InvalidArgument("modified Gaussian requires a, b, c < 0");
                 },
             },
             spec);
}

std::string profile_name(const ProfileSpec& spec) {
  static const char* names[] = {"gaussian",      "soliton", "breather", "breather-limit", "soliton-limit",
                                "hermite-sum", "modified-gaussian"};
  return names[spec.index()];
}

double evaluate(const ProfileSpec& spec, double x) {
  return std::visit(overloaded{
                        [x](const profile::Gaussian&) { return gaussian(x); },
                        [x](const profile::Soliton& s) { return soliton(s.p, s.c, s.x0, x); },
                        [x](const profile::Breather& b) { return breather(b.t, x, b.alpha, b.beta, b.x1, b.x2); },
                        [x](const profile::BreatherLimit& b) { return breather_limit(b.alpha, x); },
                        [x](const profile::SolitonLimit&) { return soliton_limit(x); },
                        [x](const profile::HermiteSum& h) { return hermite_sum(h.coeffs, x); },
                        [x](const profile::ModifiedGaussian& m) { return modified_gaussian(m, x); },
                    },
                    spec);
}

std::vector<Complex> sample(const ProfileSpec& spec, const SpaceTimeGrid& grid) {
  validate(spec);
  const std::size_t n = grid.n();
  std::vector<Complex> out(grid.spatial_size());
  if (grid.dim() == 2) {
    if (!std::holds_alternative<profile::Gaussian>(spec))
      throw InvalidArgument("only the Gaussian profile is defined in two dimensions");
    for (std::size_t a = 0; a < n; ++a)
      for (std::size_t b = 0; b < n; ++b) out[a * n + b] = gaussian2(grid.x(a), grid.x(b));
    return out;
  }
  for (std::size_t j = 0; j < n; ++j) out[j] = evaluate(spec, grid.x(j));
  return out;
}

nlohmann::json to_json(const ProfileSpec& spec) {
  nlohmann::json j = std::visit(
      overloaded{
          [](const profile::Gaussian&) { return nlohmann::json::object(); },
          [](const profile::SolitonLimit&) { return nlohmann::json::object(); },
          [](const profile::Soliton& s) { return nlohmann::json{{"p", s.p}, {"c", s.c}, {"x0", s.x0}}; },
          [](const profile::Breather& b) {
            return nlohmann::json{{"alpha", b.alpha}, {"beta", b.beta}, {"x1", b.x1}, {"x2", b.x2}, {"t", b.t}};
          },
          [](const profile::BreatherLimit& b) { return nlohmann::json{{"alpha", b.alpha}}; },
          [](const profile::HermiteSum& h) {
            return nlohmann::json{{"coeffs", h.coeffs}, {"convention", "probabilist"}};
          },
          [](const profile::ModifiedGaussian& m) {
            return nlohmann::json{{"A", m.A}, {"a", m.a}, {"B", m.B}, {"b", m.b}, {"C", m.C}, {"c", m.c}};
          },
      },
      spec);
  j["kind"] = profile_name(spec);
  return j;
}

ProfileSpec profile_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("kind")) throw InvalidArgument("profile needs a 'kind' field");
  const auto kind = j.at("kind").get<std::string>();
  auto num = [&](const char* key, double fallback) { return j.contains(key) ? j.at(key).get<double>() : fallback; };
  ProfileSpec spec;
  if (kind == "gaussian") {
    spec = profile::Gaussian{};
  } else if (kind == "soliton") {
    spec = profile::Soliton{num("p", 3.0), num("c", 1.0), num("x0", 0.0)};
  } else if (kind == "breather") {
    spec = profile::Breather{num("alpha", 1.0), num("beta", 1.0), num("x1", 0.0), num("x2", 0.0), num("t", 0.0)};
  } else if (kind == "breather-limit") {
    spec = profile::BreatherLimit{num("alpha", 1.0)};
  } else if (kind == "soliton-limit") {
    spec = profile::SolitonLimit{};
  } else if (kind == "hermite-sum") {
    if (j.contains("convention") && j.at("convention").get<std::string>() != "probabilist")
      throw InvalidArgument("Hermite coefficients must use the probabilists' normalization");
    spec = profile::HermiteSum{j.at("coeffs").get<std::vector<double>>()};
  } else if (kind == "modified-gaussian") {
    spec = profile::ModifiedGaussian{num("A", 0.0), num("a", -1.0), num("B", 0.0),
                                     num("b", -1.0), num("C", 0.0), num("c", -1.0)};
  } else {
    throw InvalidArgument("unknown profile kind '" + kind + "'");
  }
  validate(spec);
  return spec;
}

}  // namespace strichartz

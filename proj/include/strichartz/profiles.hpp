#pragma once

#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "strichartz/spectral.hpp"

namespace strichartz {

namespace profile {

/// e^{-(pi/2)|x|^2}, unit L2 mass in d = 1.
struct Gaussian {};

/// c^{1/(p-1)} Q_p(sqrt(c)(x - x0)).
struct Soliton {
  double p = 3.0;
  double c = 1.0;
  double x0 = 0.0;
};

/// B(t, x; alpha, beta, x1, x2).
struct Breather {
  double alpha = 1.0;
  double beta = 1.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double t = 0.0;
};

/// 2 sqrt(2) cos(alpha x) sech(x).
struct BreatherLimit {
  double alpha = 1.0;
};

/// e^{-|x|}.
struct SolitonLimit {};

/// sum_n b_n f_n(x) in the probabilists' Hermite functions.
struct HermiteSum {
  std::vector<double> coeffs;
};

/// A e^{a x^2} + B x^2 e^{b x^2} + C x^4 e^{c x^2}.
struct ModifiedGaussian {
  double A = 0.0, a = -1.0, B = 0.0, b = -1.0, C = 0.0, c = -1.0;
};

}  // namespace profile

using ProfileSpec = std::variant<profile::Gaussian, profile::Soliton, profile::Breather, profile::BreatherLimit,
                                 profile::SolitonLimit, profile::HermiteSum, profile::ModifiedGaussian>;

constexpr int kMaxHermiteDegree = 60;

double gaussian(double x);
double gaussian2(double x1, double x2);

/// Q_p(s) = ((p+1) / (2 cosh^2((p-1)s/2)))^{1/(p-1)}.
double soliton_q(double p, double s);
double soliton(double p, double c, double x0, double x);

double breather(double t, double x, double alpha, double beta, double x1, double x2);
double breather_limit(double alpha, double x);
double soliton_limit(double x);

/// He_n(x) e^{-x^2/4} / (sqrt(n!) (2 pi)^{1/4}) for 0 <= n <= 60.
double hermite_fn(int n, double x);
/// f_0(x) .. f_{n_max}(x) from one pass of the normalized recurrence.
std::vector<double> hermite_fns(int n_max, double x);
double hermite_sum(const std::vector<double>& coeffs, double x);

double modified_gaussian(const profile::ModifiedGaussian& m, double x);

void validate(const ProfileSpec& spec);
std::string profile_name(const ProfileSpec& spec);

/// Value of a one-dimensional profile at x.
double evaluate(const ProfileSpec& spec, double x);

/// Samples on the spatial grid, row-major for d = 2. Only the Gaussian is
/// defined in two dimensions.
std::vector<Complex> sample(const ProfileSpec& spec, const SpaceTimeGrid& grid);

nlohmann::json to_json(const ProfileSpec& spec);
ProfileSpec profile_from_json(const nlohmann::json& j);

}  // namespace strichartz

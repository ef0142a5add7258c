#include "clgp/reference.hpp"

#include <cmath>

#include "clgp/fpenv.hpp"

namespace clgp::reference {

ElboReport elbo(const VariationalState& state, const CategoricalDataset& data,
                const EpsilonDraws& eps) {
  const FlushDenormals ftz;
  state.validate_against(data);
  const Parameters& p = state.params;
  ElboReport report;
  report.per_sample_loglik.assign(eps.T, 0.0);

  for (int t = 0; t < eps.T; ++t) {
    for (int d = 0; d < p.variables(); ++d) {
      const Matrix L = p.cholesky_factor(d);
      const InducingFactor factor = factor_inducing(p.kernel[d], p.Z);
      Matrix U(p.inducing(), p.logits(d));
      for (int k = 0; k < p.logits(d); ++k) {
        U.col(k) = sample_u(p.mu[d].col(k), L, eps.u[t][d].col(k));
      }
      for (int n = 0; n < p.rows(); ++n) {
        const Matrix x = sample_x(p.m.row(n), p.log_s.row(n), eps.x[t].row(n));
        const ConditionalCoeffs cc = conditional_coeffs(p.kernel[d], p.Z, x, factor);
        report.clamped += cc.clamped;
        if (data.missing(n, d)) continue;
        const Vector f = sample_f(cc.A.col(0), cc.b(0), U, eps.f[t][d].row(n).transpose());
        report.per_sample_loglik[t] +=
            log_softmax_prob(data.at(n, d), {f.data(), static_cast<std::size_t>(f.size())});
      }
    }
  }

  report.kl_x = kl_x(p.m, p.log_s, state.sigma_x);
  if (state.include_kl_u) {
    for (int d = 0; d < p.variables(); ++d) {
      report.kl_u += kl_u(p.mu[d], p.cholesky_factor(d),
                          factor_inducing(p.kernel[d], p.Z).chol);
    }
  }
  const double mean = report.mean_loglik();
  if (eps.T > 1) {
    double ss = 0.0;
    for (double v : report.per_sample_loglik) ss += (v - mean) * (v - mean);
    report.mc_std = std::sqrt(ss / (eps.T - 1));
  }
  report.elbo = -report.kl_x - report.kl_u + mean;
  return report;
}

}  // namespace clgp::reference

#include <cmath>
#include <string>

#include "evc/error.hpp"
#include "evc/vawgan.hpp"

namespace evc::vawgan {

void validate(const GaussianPosterior& post) {
  if (post.mean.size() != post.log_var.size())
    fail(ErrorKind::Shape, "posterior mean has " + std::to_string(post.mean.size()) + " dims, log_var " +
                               std::to_string(post.log_var.size()));
  for (std::size_t d = 0; d < post.mean.size(); ++d)
    if (!std::isfinite(post.mean[d]) || !std::isfinite(post.log_var[d]))
      fail(ErrorKind::NonFinite, "posterior dim " + std::to_string(d) + " is not finite");
}

double kl_to_standard_normal(const GaussianPosterior& post) {
  validate(post);
  double s = 0.0;
  for (std::size_t d = 0; d < post.mean.size(); ++d) {
    const double lv = post.log_var[d];
    s += post.mean[d] * post.mean[d] + std::exp(lv) - 1.0 - lv;
  }
  return 0.5 * s;
}

ad::Var kl_to_standard_normal(ad::Var mean, ad::Var log_var) {
  if (mean.shape() != log_var.shape())
    fail(ErrorKind::Shape, "kl: mean " + ad::shape_string(mean.shape()) + " vs log_var " +
                               ad::shape_string(log_var.shape()));
  const std::size_t rank = mean.shape().size();
  if (rank != 1 && rank != 2) fail(ErrorKind::Shape, "kl: expected rank 1 or 2, got " + ad::shape_string(mean.shape()));
  const double rows = rank == 2 ? static_cast<double>(mean.shape()[0]) : 1.0;
  ad::Var t = ad::add(ad::square(mean), ad::exp(log_var));
  t = ad::sub(ad::add_scalar(t, -1.0), log_var);
  return ad::scale(ad::sum(t), 0.5 / rows);
}

std::vector<double> reparameterize(const GaussianPosterior& post, SeededRng& rng) {
  validate(post);
  std::vector<double> z(post.mean.size());
  for (std::size_t d = 0; d < z.size(); ++d) z[d] = post.mean[d] + std::exp(0.5 * post.log_var[d]) * rng.normal();
  return z;
}

ad::Var reparameterize(ad::Var mean, ad::Var log_var, SeededRng& rng) {
  if (mean.shape() != log_var.shape())
    fail(ErrorKind::Shape, "reparameterize: mean " + ad::shape_string(mean.shape()) + " vs log_var " +
                               ad::shape_string(log_var.shape()));
  ad::Tensor eps(mean.shape());
  for (double& v : eps.values()) v = rng.normal();
  ad::Var e = mean.tape->constant(std::move(eps));
  return ad::add(mean, ad::mul(ad::exp(ad::scale(log_var, 0.5)), e));
}

void validate(const LossWeights& w) {
  if (!std::isfinite(w.alpha) || w.alpha < 0.0) fail(ErrorKind::Config, "alpha must be finite and >= 0");
  if (!std::isfinite(w.recon_weight) || !(w.recon_weight > 0.0))
    fail(ErrorKind::Config, "recon_weight must be finite and > 0");
}

ad::Var vae_objective(ad::Var x, ad::Var recon, ad::Var mean, ad::Var log_var, const LossWeights& w) {
  validate(w);
  if (x.shape() != recon.shape())
    fail(ErrorKind::Shape, "vae_objective: x " + ad::shape_string(x.shape()) + " vs recon " +
                               ad::shape_string(recon.shape()));
  ad::Var mse = ad::mean(ad::square(ad::sub(x, recon)));
  return ad::add(kl_to_standard_normal(mean, log_var), ad::scale(mse, w.recon_weight));
}

AdversarialLosses critic_losses(ad::Var d_real, ad::Var d_fake, const LossWeights& w) {
  validate(w);
  if (d_real.value().size() == 0 || d_fake.value().size() == 0)
    fail(ErrorKind::Shape, "critic_losses: empty batch (real " + ad::shape_string(d_real.shape()) + ", fake " +
                               ad::shape_string(d_fake.shape()) + ")");
  ad::Var real = ad::mean(d_real);
  ad::Var fake = ad::mean(d_fake);
  return AdversarialLosses{ad::sub(fake, real), ad::scale(fake, -w.alpha)};
}

}  // namespace evc::vawgan

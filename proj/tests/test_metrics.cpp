#include <cmath>

#include "dtw_oracle.hpp"
#include "evc/metrics.hpp"
#include "support.hpp"

using namespace evc;

namespace {

using Pairs = std::vector<std::pair<std::size_t, std::size_t>>;

FeatureSequence col(std::vector<double> v) { return FeatureSequence::column(v, 5.0); }

// Pearson correlation written out from the textbook definition.
double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    syy += y[i] * y[i];
    sxy += x[i] * y[i];
  }
  return (n * sxy - sx * sy) / std::sqrt((n * sxx - sx * sx) * (n * syy - sy * sy));
}

}  // namespace

TEST_CASE("dtw examples") {
  const auto same = dtw_align(col({1, 5, 2, 7}), col({1, 5, 2, 7}));
  CHECK(same.pairs == diagonal_path(4).pairs);
  CHECK(same.cost == 0.0);

  const auto p = dtw_align(col({0, 1, 2}), col({0, 0, 1, 2}));
  CHECK(p.pairs == Pairs{{0, 0}, {0, 1}, {1, 2}, {2, 3}});
  CHECK(p.cost == 0.0);

  const auto one = dtw_align(col({2}), col({0, 1, 5}));
  CHECK(one.pairs == Pairs{{0, 0}, {0, 1}, {0, 2}});
  CHECK(one.cost == 2.0 + 1.0 + 3.0);

  CHECK_ERROR_KIND(dtw_align(col({1}), FeatureSequence(Matrix(1, 2), 5.0)), ErrorKind::Shape);
}

TEST_CASE("dtw matches exhaustive enumeration on short sequences") {
  const test::DtwOracle oracle(4);
  CHECK(oracle.path_count(4, 4) == 63);  // central Delannoy number D(3, 3)
  CHECK(oracle.path_count(1, 4) == 1);
  const auto seqs = test::all_sequences(4, 3);
  std::vector<FeatureSequence> cols;
  for (const auto& s : seqs) cols.push_back(test::as_column(s));
  std::size_t mismatches = 0;
  for (std::size_t x = 0; x < seqs.size(); ++x)
    for (std::size_t y = 0; y < seqs.size(); ++y) {
      const auto path = dtw_align(cols[x], cols[y]);
      validate(path, seqs[x].size(), seqs[y].size());
      const auto want = oracle.solve(seqs[x], seqs[y]);
      if (test::DtwOracle::mask_of(path) != want.mask || path.cost != want.cost) ++mismatches;
    }
  CHECK(mismatches == 0);
}

TEST_CASE("dtw cost is symmetric") {
  SeededRng rng(6);
  for (int trial = 0; trial < 100; ++trial) {
    const FeatureSequence a(test::random_matrix(rng, 1 + rng.below(30), 3), 5.0);
    const FeatureSequence b(test::random_matrix(rng, 1 + rng.below(30), 3), 5.0);
    CHECK(dtw_align(a, b).cost == doctest::Approx(dtw_align(b, a).cost).epsilon(1e-12));
  }
}

TEST_CASE("path validation") {
  CHECK_NOTHROW(validate(diagonal_path(3), 3, 3));
  CHECK_ERROR_KIND(validate(AlignmentPath{}, 1, 1), ErrorKind::Shape);
  CHECK_ERROR_KIND(validate(AlignmentPath{Pairs{{0, 0}, {2, 2}}, 0}, 3, 3), ErrorKind::Shape);
  CHECK_ERROR_KIND(validate(AlignmentPath{Pairs{{0, 0}, {1, 1}}, 0}, 3, 3), ErrorKind::Shape);
  CHECK_ERROR_KIND(validate(AlignmentPath{Pairs{{0, 1}, {1, 1}}, 0}, 2, 2), ErrorKind::Shape);
}

TEST_CASE("mel cepstral distortion") {
  Matrix r(1, 25, 0.0), c(1, 25, 0.0);
  c(0, 7) = 1.0;
  const auto path = diagonal_path(1);
  CHECK(mcd(FeatureSequence(r, 5.0), FeatureSequence(r, 5.0), path) == 0.0);
  CHECK(mcd(FeatureSequence(r, 5.0), FeatureSequence(c, 5.0), path) == doctest::Approx(6.1421).epsilon(1e-4));
  CHECK(mcd(FeatureSequence(r, 5.0), FeatureSequence(c, 5.0), path) ==
        doctest::Approx(10.0 / std::log(10.0) * std::sqrt(2.0)).epsilon(1e-14));
  CHECK(kMcdConstant == doctest::Approx(10.0 / std::log(10.0)).epsilon(1e-16));

  // c0 is ignored unless the caller says column 0 is a cepstral coefficient.
  Matrix e = r;
  e(0, 0) = 5.0;
  CHECK(mcd(FeatureSequence(r, 5.0), FeatureSequence(e, 5.0), path) == 0.0);
  CHECK(mcd(FeatureSequence(r, 5.0), FeatureSequence(e, 5.0), path, McdOptions{false}) > 0.0);
  CHECK_ERROR_KIND(mcd(col({1}), col({1}), path), ErrorKind::Config);

  SeededRng rng(10);
  const FeatureSequence a(test::random_matrix(rng, 20, 25), 5.0);
  const FeatureSequence b(test::random_matrix(rng, 20, 25), 5.0);
  Matrix far = a.data();
  for (std::size_t i = 0; i < far.data().size(); ++i) far.data()[i] += 2.0 * (b.data().data()[i] - a.data().data()[i]);
  const auto d = diagonal_path(20);
  CHECK(mcd(a, b, d) == doctest::Approx(mcd(b, a, d)).epsilon(1e-14));
  CHECK(mcd(a, FeatureSequence(far, 5.0), d) == doctest::Approx(2.0 * mcd(a, b, d)).epsilon(1e-12));
}

TEST_CASE("log spectral distortion") {
  SeededRng rng(14);
  const Matrix ref = test::random_matrix(rng, 12, 513, 1e-4, 3.0);
  Matrix twice = ref, tenfold = ref;
  for (double& v : twice.data()) v *= 2.0;
  for (double& v : tenfold.data()) v *= 10.0;
  const FeatureSequence r(ref, 5.0);
  const auto d = diagonal_path(12);
  CHECK(lsd(r, r, d) == 0.0);
  CHECK(std::abs(lsd(r, FeatureSequence(twice, 5.0), d) - 20.0 * std::log10(2.0)) < 1e-9);
  CHECK(std::abs(lsd(r, FeatureSequence(tenfold, 5.0), d) - 20.0) < 1e-9);
  CHECK(lsd(FeatureSequence(twice, 5.0), r, d) == doctest::Approx(lsd(r, FeatureSequence(twice, 5.0), d)));
  Matrix bad = ref;
  bad(3, 4) = 0.0;
  CHECK_ERROR_KIND(lsd(r, FeatureSequence(bad, 5.0), d), ErrorKind::Domain);
}

TEST_CASE("f0 rmse and correlation") {
  const auto d2 = diagonal_path(2);
  CHECK(f0_rmse(std::vector<double>{100, 100}, std::vector<double>{103, 97}, d2) == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(f0_rmse(std::vector<double>{100, 120}, std::vector<double>{100, 120}, d2) == 0.0);
  CHECK(f0_rmse(std::vector<double>{100, 120}, std::vector<double>{107, 127}, d2) == doctest::Approx(7.0));
  CHECK(f0_rmse(std::vector<double>{100, 200}, std::vector<double>{200, 100}, d2, F0Scale::Log) ==
        doctest::Approx(std::log(2.0)));
  CHECK_ERROR_KIND(f0_rmse(std::vector<double>{1}, std::vector<double>{1}, AlignmentPath{}), ErrorKind::Shape);

  const std::vector<double> x{1, 2, 3}, y{1, 2, 4};
  const auto d3 = diagonal_path(3);
  CHECK(pcc(x, y, d3) == doctest::Approx(pearson(x, y)).epsilon(1e-14));
  CHECK(pcc(x, y, d3) == doctest::Approx(0.98198).epsilon(1e-5));

  SeededRng rng(3);
  const auto a = test::random_vector(rng, 50, 80, 300);
  const auto b = test::random_vector(rng, 50, 80, 300);
  std::vector<double> affine(50), neg(50);
  for (std::size_t i = 0; i < 50; ++i) {
    affine[i] = 2.0 * a[i] + 5.0;
    neg[i] = -a[i];
  }
  const auto d50 = diagonal_path(50);
  CHECK(std::abs(pcc(a, affine, d50) - 1.0) < 1e-12);
  CHECK(std::abs(pcc(a, neg, d50) + 1.0) < 1e-12);
  std::vector<double> b2(50);
  for (std::size_t i = 0; i < 50; ++i) b2[i] = 0.3 * b[i] + 40.0;
  CHECK(std::abs(pcc(a, b2, d50) - pcc(a, b, d50)) < 1e-12);
  CHECK(f0_rmse(a, b, d50) == doctest::Approx(f0_rmse(b, a, d50)).epsilon(1e-14));
  CHECK_ERROR_KIND(pcc(std::vector<double>{5, 5}, std::vector<double>{1, 2}, d2), ErrorKind::ZeroVariance);
}

TEST_CASE("utterance evaluation") {
  SeededRng rng(17);
  UtteranceFeatures u;
  u.mcep = FeatureSequence(test::random_matrix(rng, 30, 25), 5.0);
  u.spectrum = FeatureSequence(test::random_matrix(rng, 30, 16, 0.1, 2.0), 5.0);
  u.f0_hz = test::random_vector(rng, 30, 90, 250);
  const MetricReport self = evaluate(u, u);
  CHECK(self.mcd_db == 0.0);
  CHECK(self.lsd_db == 0.0);
  CHECK(self.f0_rmse_hz == 0.0);
  CHECK(*self.pcc == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(self.n_frames_compared == 30);

  UtteranceFeatures only_f0;
  only_f0.f0_hz = u.f0_hz;
  const MetricReport partial = evaluate(only_f0, u);
  CHECK_FALSE(partial.mcd_db.has_value());
  CHECK_FALSE(partial.lsd_db.has_value());
  CHECK(partial.f0_rmse_hz == 0.0);

  UtteranceFeatures mcep_only;
  mcep_only.mcep = u.mcep;
  CHECK_ERROR_KIND(evaluate(only_f0, mcep_only), ErrorKind::Data);

  UtteranceFeatures shorter = u;
  shorter.f0_hz->pop_back();
  CHECK_ERROR_KIND(evaluate(u, shorter), ErrorKind::Shape);

  const MetricReport avg = mean_report({self, partial, MetricReport{2.0, std::nullopt, 4.0, 0.5, 10}});
  CHECK(avg.mcd_db == 1.0);
  CHECK(avg.lsd_db == 0.0);
  CHECK(*avg.f0_rmse_hz == doctest::Approx(4.0 / 3.0));
  CHECK(avg.n_frames_compared == 70);
  CHECK_FALSE(mean_report({}).mcd_db.has_value());
}

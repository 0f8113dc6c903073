// Runs the ten acceptance criteria and prints one PASS/FAIL line for each.
// Exit status is non-zero when any criterion fails.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "../integration/cli_helpers.hpp"
#include "cantus/app/codec.hpp"
#include "cantus/app/corpus.hpp"
#include "cantus/app/log.hpp"
#include "cantus/condition/network.hpp"
#include "cantus/diffusion/diffusion.hpp"
#include "cantus/io.hpp"
#include "cantus/losses/losses.hpp"
#include "cantus/metrics/metrics.hpp"
#include "cantus/neural/gradcheck.hpp"
#include "cantus/neural/models.hpp"
#include "cantus/neural/ops.hpp"
#include "cantus/rng.hpp"
#include "cantus/rvq/rvq.hpp"

using namespace cantus;
namespace fs = std::filesystem;
using nn::Tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const std::string& title, const std::function<Outcome()>& fn) {
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    o = fn();
  } catch (const std::exception& e) {
    o = {false, std::string("threw: ") + e.what()};
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::printf("criterion %2d %s  %s (%.0fs): %s\n", id, o.pass ? "PASS" : "FAIL", title.c_str(), secs, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

Matrix randn(Eigen::Index r, Eigen::Index c, std::mt19937_64& rng, double sd = 1.0) {
  std::normal_distribution<double> g(0.0, sd);
  Matrix m(r, c);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = g(rng);
  return m;
}

Tensor readout(const Tensor& y, const Matrix& r) { return nn::sum(nn::mul(y, Tensor::constant(r))); }

template <typename... Args>
std::string fmt(const char* f, Args... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

// 1 ------------------------------------------------------------------------

Outcome schedule_integral() {
  const diffusion::NoiseSchedule s;
  // Composite Simpson on 2000 panels; exact for a linear integrand up to rounding.
  const int n = 2000;
  const double h = 1.0 / n;
  long double acc = s.beta(0.0) + s.beta(1.0);
  for (int i = 1; i < n; ++i) acc += (i % 2 ? 4.0L : 2.0L) * s.beta(i * h);
  const double quad = static_cast<double>(acc * h / 3.0L);
  const double closed = s.integral(0.0, 1.0);
  const double rel = std::abs(closed - quad) / quad;
  return {rel < 1e-10 && std::abs(closed - 10.025) < 1e-12,
          fmt("closed form %.15g, Simpson %.15g, rel err %.2e", closed, quad, rel)};
}

// 2 ------------------------------------------------------------------------

Outcome forward_oracle() {
  const diffusion::NoiseSchedule s;
  const int n = 100000, dims = 4;
  auto rng = make_rng(2024, 2);
  std::normal_distribution<double> n01(0.0, 1.0);
  // Same-sign endpoints keep every mean at least 1 away from zero.
  const RowVector z0 = (RowVector(dims) << 2.0, 3.0, -1.5, -2.0).finished();
  const RowVector mu = (RowVector(dims) << 1.0, 1.5, -1.0, -2.5).finished();
  double worst = 0.0;
  std::ostringstream d;
  for (const double t : {0.25, 0.5, 1.0}) {
    const int steps = 1000;
    const double h = t / steps;
    Matrix z = z0.replicate(n, 1);
    for (int k = 0; k < steps; ++k) {
      const double b = s.beta(k * h);
      for (Eigen::Index i = 0; i < n; ++i) {
        for (int c = 0; c < dims; ++c) z(i, c) += 0.5 * b * (mu(c) - z(i, c)) * h + std::sqrt(b * h) * n01(rng);
      }
    }
    const auto f = diffusion::forward_sample(s, z0.replicate(n, 1), mu.replicate(n, 1), t, randn(n, dims, rng));
    for (int c = 0; c < dims; ++c) {
      auto moments = [&](const Matrix& m) {
        const double mean = m.col(c).mean();
        return std::pair{mean, (m.col(c).array() - mean).square().sum() / (n - 1)};
      };
      const auto [em_m, em_v] = moments(z);
      const auto [fs_m, fs_v] = moments(f.z_t);
      worst = std::max({worst, std::abs(fs_m - em_m) / std::abs(em_m), std::abs(fs_v - em_v) / em_v});
    }
    d << "t=" << t << " ";
  }
  d << "max relative moment error " << worst << " (per dim, " << n << " samples)";
  return {worst < 0.02, d.str()};
}

// 3 ------------------------------------------------------------------------

Outcome reverse_oracle() {
  const diffusion::NoiseSchedule s;
  const int n = 10000, dims = 4;
  const double sigma = 0.5;
  const RowVector mu_row = (RowVector(dims) << 0.7, -0.3, 1.2, 0.0).finished();
  const Matrix mu = mu_row.replicate(n, 1);
  // p_t = N(mu, w^2 sigma^2 + lambda) for data N(mu, sigma^2).
  const diffusion::ScoreFn score = [&s, sigma](const Matrix& z, const Matrix& m, const Matrix&, double t) {
    const double w = s.data_weight(t);
    return Matrix(-(z - m) / (w * w * sigma * sigma + s.lambda(t)));
  };
  auto run = [&](int steps) {
    const Matrix z = diffusion::reverse_sample(score, mu, Matrix::Zero(n, 1), s, {steps, 1.0, 77, false}).z;
    double mean_err = 0.0, std_err = 0.0, total = 0.0;
    for (int c = 0; c < dims; ++c) {
      const double m = z.col(c).mean();
      const double sd = std::sqrt((z.col(c).array() - m).square().sum() / (n - 1));
      mean_err = std::max(mean_err, std::abs(m - mu_row(c)));
      std_err = std::max(std_err, std::abs(sd - sigma) / sigma);
      total += std::abs(m - mu_row(c)) + std::abs(sd - sigma);
    }
    return std::array<double, 3>{mean_err, std_err, total};
  };
  const auto a = run(200);
  const auto b = run(20);
  return {a[0] < 0.02 && a[1] < 0.05 && a[2] < b[2],
          fmt("N=200: max |mean-mu| %.4f, max std rel err %.4f, total err %.4f; N=20 total err %.4f", a[0], a[1],
              a[2], b[2])};
}

// 4 ------------------------------------------------------------------------

Outcome gradient_checks() {
  auto rng = make_rng(2024, 4);
  double worst = 0.0;
  std::string where;
  int checks = 0;
  auto track = [&](const std::string& what, const nn::GradCheckResult& r) {
    ++checks;
    if (r.max_rel_err > worst) {
      worst = r.max_rel_err;
      where = what + " " + r.worst;
    }
  };
  for (int point = 0; point < 10; ++point) {
    const auto seed = 900 + static_cast<std::uint64_t>(point);
    {
      nn::Linear lin(5, 3, rng);
      auto x = Tensor::parameter(randn(4, 5, rng));
      const Matrix r = randn(4, 3, rng);
      nn::ParamList w = {{"x", x}};
      lin.collect("linear.", w);
      track("linear", nn::grad_check([&] { return readout(lin(x), r); }, w, rng, 8));
    }
    {
      nn::Conv1d3 conv(5, 6, rng);
      auto x = Tensor::parameter(randn(7, 5, rng));
      const Matrix r = randn(7, 6, rng), r3 = randn(7, 3, rng);
      nn::ParamList w = {{"x", x}};
      conv.collect("conv.", w);
      track("conv/gated", nn::grad_check([&] { return nn::add(readout(conv(x), r), readout(nn::gated(conv(x)), r3)); },
                                         w, rng, 8));
    }
    {
      nn::Embedding emb(6, 4, rng);
      const std::vector<int> ids = {0, 3, 3, 5, 1};
      const Matrix r = randn(5, 4, rng);
      nn::ParamList w;
      emb.collect("embedding.", w);
      track("embedding", nn::grad_check([&] { return readout(emb(ids), r); }, w, rng, 8));
    }
    {
      nn::AutoencoderConfig ac{10, 6, 3, 0.25};
      nn::Encoder enc(ac, seed);
      nn::Decoder dec(ac, seed);
      nn::LogSoftmaxHead head(3, 4, seed);
      nn::Discriminator disc(10, 5, seed);
      auto x = Tensor::parameter(randn(6, 10, rng, 2.0));
      const Matrix r10 = randn(6, 10, rng), r4 = randn(6, 4, rng), r1 = randn(6, 1, rng), r5 = randn(6, 5, rng);
      nn::ParamList w = {{"x", x}};
      enc.collect("enc.", w);
      dec.collect("dec.", w);
      head.collect("head.", w);
      disc.collect("disc.", w);
      track("codec nets", nn::grad_check(
                              [&] {
                                const Tensor z = enc(x);
                                const auto d = disc(dec(z));
                                return nn::add(nn::add(readout(dec(z), r10), readout(head(z), r4)),
                                               nn::add(readout(d.scores, r1), readout(d.features[1], r5)));
                              },
                              w, rng, 4));
    }
    {
      nn::ScoreNetConfig sc;
      sc.latent_dim = 3;
      sc.cond_dim = 5;
      sc.width = 8;
      sc.blocks = 2;
      sc.time_dim = 8;
      const diffusion::NoiseSchedule sched;
      sc.noise_std = [sched](double t) { return std::sqrt(sched.lambda(t)); };
      nn::ScoreNet net(sc, seed);
      auto z = Tensor::parameter(randn(6, 3, rng));
      auto mu = Tensor::parameter(randn(6, 3, rng));
      auto h = Tensor::parameter(randn(6, 5, rng));
      const Matrix r = randn(6, 3, rng);
      const double t = 0.1 + 0.08 * point;
      nn::ParamList w = {{"z_t", z}, {"mu_hat", mu}, {"h_cond", h}};
      net.collect("score.", w);
      track("score net", nn::grad_check([&] { return readout(net(z, mu, h, t), r); }, w, rng, 3));
    }
    {
      condition::ConditionNet cn({7, 6, 5, 3, 2, 4, 12, true}, seed);
      condition::FrameGrid g;
      g.phoneme = {1, 2, 2, 6, 0, 4, 4};
      g.pitch = {61, 61, 65, 65, 0, 70, 70};
      g.duration = {8, 8, 8, 16, 4, 2, 2};
      g.tempo = {100, 100, 100, 100, 100, 140, 140};
      auto feats = Tensor::parameter(randn(7, 4, rng));
      const std::vector<int> f0 = {0, 1, 5, 5, 12, 3, 0};
      const Matrix rh = randn(7, 5, rng), rm = randn(7, 3, rng);
      nn::ParamList w = {{"features", feats}};
      cn.collect("cond.", w);
      track("condition net", nn::grad_check(
                                 [&] {
                                   const auto a = cn.build(g);
                                   const auto b = cn.build_unsupervised(feats, f0);
                                   return nn::add(nn::add(readout(a.h_cond, rh), readout(a.mu_hat, rm)),
                                                  nn::add(readout(b.h_cond, rh), readout(b.mu_hat, rm)));
                                 },
                                 w, rng, 3));
    }
  }
  return {worst < 1e-4, fmt("%d checks over 10 points, max rel err %.2e at %s", checks, worst, where.c_str())};
}

// 5 ------------------------------------------------------------------------

double ctc_by_enumeration(const Matrix& lp, const std::vector<int>& target) {
  const int T = static_cast<int>(lp.rows());
  const int K = static_cast<int>(lp.cols());
  std::vector<int> path(static_cast<std::size_t>(T), 0);
  double total = 0.0;
  for (;;) {
    std::vector<int> collapsed;
    int prev = -1;
    for (int k : path) {
      if (k != prev && k != 0) collapsed.push_back(k);
      prev = k;
    }
    if (collapsed == target) {
      double lp_sum = 0.0;
      for (int t = 0; t < T; ++t) lp_sum += lp(t, path[t]);
      total += std::exp(lp_sum);
    }
    int pos = 0;
    while (pos < T && ++path[pos] == K) path[pos++] = 0;
    if (pos == T) break;
  }
  return -std::log(total);
}

Outcome ctc_oracle() {
  auto rng = make_rng(2024, 5);
  int done = 0;
  double worst = 0.0;
  while (done < 50) {
    const int T = std::uniform_int_distribution<int>(1, 5)(rng);
    const int A = std::uniform_int_distribution<int>(1, 3)(rng);
    std::vector<int> target(std::uniform_int_distribution<std::size_t>(1, T)(rng));
    for (int& l : target) l = std::uniform_int_distribution<int>(1, A)(rng);
    if (losses::ctc_min_frames(target) > T) continue;
    Matrix lp = randn(T, A + 1, rng, 1.5);
    for (int t = 0; t < T; ++t) lp.row(t).array() -= std::log(lp.row(t).array().exp().sum());
    worst = std::max(worst, std::abs(losses::ctc_loss(lp, target) - ctc_by_enumeration(lp, target)));
    ++done;
  }
  return {worst < 1e-10, fmt("%d instances (T<=5, A<=3), max abs err %.2e", done, worst)};
}

// Toy pipeline shared by 6, 7, 8 and 10 -------------------------------------

struct Pipeline {
  fs::path root;
  fs::path corpus, codec, latent;
  bool ok = false;
  std::string error;
};

Pipeline& pipeline() {
  static Pipeline p = [] {
    Pipeline q;
    q.root = cli::fresh_dir("acceptance");
    q.corpus = q.root / "corpus";
    q.codec = q.root / "codec";
    q.latent = q.root / "latent_data_0";
    auto step = [&](const std::string& args) {
      const auto r = cli::run(args, q.root);
      if (r.code != 0) q.error = args + " -> exit " + std::to_string(r.code) + ": " + r.err;
      return r.code == 0;
    };
    q.ok = step("gen-corpus --songs 3 --seed 0 --out " + q.corpus.string()) &&
           step("train-codec --seed 0 --steps 2000 --corpus " + q.corpus.string() + " --out " + q.codec.string()) &&
           step("train-latent --seed 0 --steps 5000 --prior data --corpus " + q.corpus.string() + " --codec " +
                q.codec.string() + " --out " + q.latent.string());
    return q;
  }();
  return p;
}

// 6 ------------------------------------------------------------------------

Outcome rvq_properties() {
  auto& p = pipeline();
  if (!p.ok) return {false, "pipeline failed: " + p.error};
  const auto model = app::CodecModel::load(p.codec);
  const auto corpus = app::load_corpus(p.corpus, model.cfg);
  bool zero_entry = true;
  for (const auto& b : model.coder.books) zero_entry = zero_entry && b.entries.row(0).isZero(0.0);

  Matrix z(0, model.cfg.latent_dim);
  for (const auto& s : corpus.songs) {
    const Matrix zs = model.encode_latent(s.log_mel);
    Matrix next(z.rows() + zs.rows(), z.cols());
    next << z, zs;
    z = std::move(next);
  }
  std::ostringstream d;
  bool monotone = true;
  double prev = INFINITY;
  d << "distortion C=1..8:";
  for (int c = 1; c <= model.coder.C(); ++c) {
    const double dist = rvq::mean_distortion(model.coder, z, c);
    d << ' ' << fmt("%.4g", dist);
    monotone = monotone && dist <= prev;
    prev = dist;
  }

  // Roundtrip through the CLI twice.
  const auto dir = p.root / "rvq";
  fs::create_directories(dir);
  const auto wav = (p.corpus / "song_000.wav").string();
  bool det = true;
  for (const char* tag : {"a", "b"}) {
    det = det && cli::run("codec encode --codec " + p.codec.string() + " --in " + wav + " --out " + (dir / tag).string() + ".hsc", dir).code == 0;
    det = det && cli::run("codec decode --codec " + p.codec.string() + " --in " + (dir / tag).string() + ".hsc --out " +
                              (dir / tag).string() + ".f32", dir).code == 0;
  }
  det = det && cli::slurp(dir / "a.hsc") == cli::slurp(dir / "b.hsc") && cli::slurp(dir / "a.f32") == cli::slurp(dir / "b.f32");
  const auto codes = rvq::read_bitstream(dir / "a.hsc").codes;
  det = det && codes.indices == rvq::encode(model.coder, model.encode_latent(corpus.songs[0].log_mel)).indices;

  // Commitment against residual norms computed from the chosen entries alone.
  const auto tr = rvq::encode_trace(model.coder, z);
  double independent = 0.0;
  Matrix r = z;
  for (int c = 0; c < model.coder.C(); ++c) {
    Matrix q(z.rows(), z.cols());
    for (Eigen::Index f = 0; f < z.rows(); ++f) q.row(f) = model.coder.books[c].entries.row(tr.codes.indices(c, f));
    independent += (r - q).rowwise().squaredNorm().sum() / static_cast<double>(z.rows());
    r -= q;
  }
  const double commit_err = std::abs(rvq::commitment_loss(tr.residuals, tr.selected) - independent);
  d << fmt("; zero entry %s; roundtrip deterministic %s; commitment err %.2e", zero_entry ? "yes" : "no",
           det ? "yes" : "no", commit_err);
  return {zero_entry && monotone && det && commit_err < 1e-10, d.str()};
}

// 7 ------------------------------------------------------------------------

Outcome end_to_end() {
  auto& p = pipeline();
  if (!p.ok) return {false, "pipeline failed: " + p.error};
  std::ostringstream d;

  const auto codec_log = app::read_csv(p.codec / "train_log.csv");
  const auto recon = codec_log.series("recon");
  double tail = 0.0;
  const std::size_t w = std::min<std::size_t>(100, recon.size());
  for (std::size_t i = recon.size() - w; i < recon.size(); ++i) tail += recon[i] / w;
  const double drop = 1.0 - tail / recon.front();
  d << fmt("codec recon L1 %.3f -> %.3f (last-100 mean, drop %.0f%%)", recon.front(), tail, 100.0 * drop);

  const auto latent_log = app::read_csv(p.latent / "train_log.csv");
  const auto ldiff = latent_log.series("l_diff");
  double first = 0.0, last = 0.0;
  const std::size_t lw = std::min<std::size_t>(100, ldiff.size());
  for (std::size_t i = 0; i < lw; ++i) first += ldiff[i] / lw;
  for (std::size_t i = ldiff.size() - lw; i < ldiff.size(); ++i) last += ldiff[i] / lw;
  d << fmt("; L_diff moving average %.3f -> %.3f (ratio %.3f)", first, last, last / first);

  int notes = 0, within = 0;
  for (const char* song : {"song_000", "song_001", "song_002"}) {
    const auto out = p.root / (std::string("sample_") + song);
    const auto r = cli::run("sample --seed 0 --score " + (p.corpus / (std::string(song) + ".json")).string() + " --codec " +
                                p.codec.string() + " --latent " + p.latent.string() + " --out " + out.string(),
                            p.root);
    if (r.code != 0) return {false, d.str() + "; sample failed: " + r.err};
    const auto report = cli::read_json(out / "report.json");
    for (const auto& n : report["notes"]) {
      ++notes;
      if (!n["cents_error"].is_null() && std::abs(n["cents_error"].get<double>()) <= 100.0) ++within;
    }
  }
  const double frac = static_cast<double>(within) / notes;
  d << fmt("; notes within 100 cents %d/%d", within, notes);

  // Five seeds on one score: contours move while the tune holds.
  std::vector<std::vector<double>> contours;
  double worst_seed = 1.0;
  for (int seed = 1; seed <= 5; ++seed) {
    const auto out = p.root / ("seed_" + std::to_string(seed));
    if (cli::run("sample --seed " + std::to_string(seed) + " --score " + (p.corpus / "song_001.json").string() +
                     " --codec " + p.codec.string() + " --latent " + p.latent.string() + " --out " + out.string(),
                 p.root).code != 0) {
      return {false, d.str() + "; seed sample failed"};
    }
    std::vector<double> f0;
    const auto track = cli::read_json(out / "f0.json");
    for (const auto& v : track["f0"]) f0.push_back(v.get<double>());
    contours.push_back(f0);
    worst_seed = std::min(worst_seed, cli::read_json(out / "report.json")["notes_within_100_cents"].get<double>());
  }
  double min_pair = INFINITY;
  for (std::size_t a = 0; a < contours.size(); ++a) {
    for (std::size_t b = a + 1; b < contours.size(); ++b) {
      double diff = 0.0;
      for (std::size_t i = 0; i < contours[a].size(); ++i) diff += std::abs(contours[a][i] - contours[b][i]);
      min_pair = std::min(min_pair, diff / contours[a].size());
    }
  }
  d << fmt("; 5 seeds: min pairwise mean |dF0| %.3f Hz, worst per-seed within-100 fraction %.2f", min_pair, worst_seed);
  return {drop >= 0.6 && last < 0.5 * first && frac >= 0.8 && min_pair > 0.0 && worst_seed >= 0.8, d.str()};
}

// 8 ------------------------------------------------------------------------

Outcome ablation() {
  auto& p = pipeline();
  if (!p.ok) return {false, "pipeline failed: " + p.error};
  std::ostringstream d;
  int agree = 0;
  for (int seed = 0; seed < 3; ++seed) {
    std::array<double, 2> eval{}, ma{};
    for (int k = 0; k < 2; ++k) {
      const std::string prior = k == 0 ? "data" : "standard";
      const auto out = p.root / ("latent_" + prior + "_" + std::to_string(seed));
      if (!(seed == 0 && k == 0)) {
        const auto r = cli::run("train-latent --seed " + std::to_string(seed) + " --steps 5000 --prior " + prior +
                                    " --corpus " + p.corpus.string() + " --codec " + p.codec.string() + " --out " +
                                    out.string(), p.root);
        if (r.code != 0) return {false, "train-latent failed: " + r.err};
      }
      const auto s = cli::read_json(out / "summary.json");
      eval[k] = s["l_diff_eval"].get<double>();
      ma[k] = s["l_diff_final_ma"].get<double>();
    }
    const bool ok = eval[1] >= eval[0];
    agree += ok;
    d << fmt("seed %d: data %.4f vs standard %.4f (final MA %.4f vs %.4f) %s; ", seed, eval[0], eval[1], ma[0], ma[1],
             ok ? "ordered" : "reversed");
  }
  d << agree << "/3 seeds ordered";
  return {agree >= 2, d.str()};
}

// 9 ------------------------------------------------------------------------

Outcome metric_units() {
  signal::PitchTrack gt, octave;
  auto rng = make_rng(2024, 9);
  std::uniform_real_distribution<double> hz(80.0, 900.0), per(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const bool voiced = i % 7 != 0;
    const double f = voiced ? hz(rng) : 0.0;
    gt.f0.push_back(f);
    gt.periodicity.push_back(per(rng));
    gt.voiced.push_back(voiced);
    octave.f0.push_back(2.0 * f);
    octave.periodicity.push_back(gt.periodicity.back());
    octave.voiced.push_back(voiced);
  }
  const Matrix spec = randn(200, 16, rng);
  const auto same = metrics::evaluate(spec, spec, gt, gt);
  const auto oct = metrics::evaluate(spec, spec, gt, octave);
  return {oct.pitch_cents_rmse == 1200.0 && same.mae == 0.0 && same.pitch_cents_rmse == 0.0 &&
              same.periodicity_rmse == 0.0 && same.vuv_f1 == 1.0,
          fmt("octave %.17g cents; identical: mae %g pitch %g periodicity %g F1 %g", oct.pitch_cents_rmse, same.mae,
              same.pitch_cents_rmse, same.periodicity_rmse, same.vuv_f1)};
}

// 10 -----------------------------------------------------------------------

Outcome determinism() {
  const auto root = cli::fresh_dir("determinism");
  cli::write_text(root / "cfg.json", R"({"codec": {"train_steps": 40}, "latent": {"train_steps": 40}, "steps": 20})");
  const std::string cfg = "--config " + (root / "cfg.json").string() + " --seed 9 ";
  std::vector<std::string> mismatched;
  for (const char* tag : {"a", "b"}) {
    const auto d = root / tag;
    const std::vector<std::string> cmds = {
        "gen-corpus " + cfg + "--songs 2 --out " + (d / "corpus").string(),
        "train-codec " + cfg + "--corpus " + (d / "corpus").string() + " --out " + (d / "codec").string(),
        "codec encode --codec " + (d / "codec").string() + " --in " + (d / "corpus" / "song_000.wav").string() +
            " --out " + (d / "song.hsc").string(),
        "codec decode --codec " + (d / "codec").string() + " --in " + (d / "song.hsc").string() + " --out " +
            (d / "song.f32").string(),
        "train-latent " + cfg + "--unlabeled-ratio 0.5 --corpus " + (d / "corpus").string() + " --codec " +
            (d / "codec").string() + " --out " + (d / "latent").string(),
        "sample " + cfg + "--score " + (d / "corpus" / "song_001.json").string() + " --codec " + (d / "codec").string() +
            " --latent " + (d / "latent").string() + " --out " + (d / "sample").string(),
        "evaluate " + (d / "corpus" / "song_000.wav").string() + " " + (d / "corpus" / "song_000.wav").string() +
            " --out " + (d / "eval.json").string()};
    for (const auto& c : cmds) {
      const auto r = cli::run(c, root);
      if (r.code != 0) return {false, c + " -> exit " + std::to_string(r.code) + ": " + r.err};
    }
  }
  for (const char* sub : {"corpus", "codec", "latent", "sample"}) {
    if (cli::tree_digest(root / "a" / sub) != cli::tree_digest(root / "b" / sub)) mismatched.push_back(sub);
  }
  for (const char* file : {"song.hsc", "song.f32", "eval.json"}) {
    if (cli::slurp(root / "a" / file) != cli::slurp(root / "b" / file)) mismatched.push_back(file);
  }

  const auto t0 = std::chrono::steady_clock::now();
  const auto sc = cli::run("selfcheck", root);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  std::string diff;
  for (const auto& m : mismatched) diff += m + " ";
  return {mismatched.empty() && sc.code == 0 && secs < 300.0,
          fmt("7 commands run twice, differing outputs: %s; selfcheck exit %d in %.1fs", diff.empty() ? "none" : diff.c_str(),
              sc.code, secs)};
}

}  // namespace

int main() {
  report(1, "schedule closed form", schedule_integral);
  report(2, "forward-process moments vs Euler-Maruyama", forward_oracle);
  report(3, "reverse sampler on an analytic Gaussian", reverse_oracle);
  report(4, "gradient checks", gradient_checks);
  report(5, "CTC vs path enumeration", ctc_oracle);
  report(6, "RVQ properties on the trained toy codec", rvq_properties);
  report(7, "toy end-to-end", end_to_end);
  report(8, "prior ablation direction", ablation);
  report(9, "metric units", metric_units);
  report(10, "determinism and selfcheck time", determinism);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}

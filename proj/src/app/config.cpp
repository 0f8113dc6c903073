#include "cantus/app/config.hpp"

#include <functional>
#include <map>

#include "cantus/error.hpp"
#include "cantus/io.hpp"

namespace cantus::app {

using nlohmann::json;

std::string to_string(LatentTarget t) { return t == LatentTarget::z0 ? "z0" : "zq"; }
std::string to_string(PriorKind p) { return p == PriorKind::data ? "data" : "standard"; }

LatentTarget parse_target(const std::string& s) {
  if (s == "z0") return LatentTarget::z0;
  if (s == "zq") return LatentTarget::zq;
  throw ValidationError("target must be z0 or zq, got '" + s + "'");
}

PriorKind parse_prior(const std::string& s) {
  if (s == "data") return PriorKind::data;
  if (s == "standard") return PriorKind::standard;
  throw ValidationError("prior must be data or standard, got '" + s + "'");
}

namespace {

// One table drives loading, saving and unknown-key detection.
struct Field {
  std::function<void(RunConfig&, const json&)> set;
  std::function<json(const RunConfig&)> get;
};

template <typename T>
Field field(T RunConfig::*member) {
  return {[member](RunConfig& c, const json& v) { c.*member = v.get<T>(); },
          [member](const RunConfig& c) { return json(c.*member); }};
}

template <typename T, typename S>
Field nested(S RunConfig::*group, T S::*member) {
  return {[group, member](RunConfig& c, const json& v) { (c.*group).*member = v.get<T>(); },
          [group, member](const RunConfig& c) { return json((c.*group).*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> f = [] {
    std::map<std::string, Field> m;
    m["seed"] = field(&RunConfig::seed);
    m["sample_rate"] = field(&RunConfig::sample_rate);
    m["fft_size"] = field(&RunConfig::fft_size);
    m["win_size"] = field(&RunConfig::win_size);
    m["hop_size"] = field(&RunConfig::hop_size);
    m["mel_bins"] = field(&RunConfig::mel_bins);
    m["fmin"] = field(&RunConfig::fmin);
    m["fmax"] = field(&RunConfig::fmax);
    m["mel_floor"] = field(&RunConfig::mel_floor);
    m["f0_fmin"] = field(&RunConfig::f0_fmin);
    m["f0_fmax"] = field(&RunConfig::f0_fmax);
    m["voicing_threshold"] = field(&RunConfig::voicing_threshold);
    m["latent_dim"] = field(&RunConfig::latent_dim);
    m["width"] = field(&RunConfig::width);
    m["quantizers"] = field(&RunConfig::quantizers);
    m["codebook_size"] = field(&RunConfig::codebook_size);
    m["ema_decay"] = field(&RunConfig::ema_decay);
    m["dead_threshold"] = field(&RunConfig::dead_threshold);
    m["reseed_interval"] = field(&RunConfig::reseed_interval);
    m["codec.window"] = field(&RunConfig::codec_window);
    m["codec.train_steps"] = field(&RunConfig::codec_train_steps);
    m["codec.lr"] = field(&RunConfig::codec_lr);
    m["codec.adversarial"] = field(&RunConfig::adversarial);
    m["codec.disc_width"] = field(&RunConfig::disc_width);
    m["blocks"] = field(&RunConfig::blocks);
    m["time_dim"] = field(&RunConfig::time_dim);
    m["cond.hidden"] = field(&RunConfig::cond_hidden);
    m["cond.emb_dim"] = field(&RunConfig::cond_emb);
    m["cond.blocks"] = field(&RunConfig::cond_blocks);
    m["cond.feature_dim"] = field(&RunConfig::feature_dim);
    m["cond.f0_bins"] = field(&RunConfig::f0_bins);
    m["latent.window"] = field(&RunConfig::latent_window);
    m["latent.batch"] = field(&RunConfig::latent_batch);
    m["latent.train_steps"] = field(&RunConfig::latent_train_steps);
    m["latent.lr"] = field(&RunConfig::latent_lr);
    m["unlabeled_ratio"] = field(&RunConfig::unlabeled_ratio);
    m["target"] = {[](RunConfig& c, const json& v) { c.target = parse_target(v.get<std::string>()); },
                   [](const RunConfig& c) { return json(to_string(c.target)); }};
    m["prior"] = {[](RunConfig& c, const json& v) { c.prior = parse_prior(v.get<std::string>()); },
                  [](const RunConfig& c) { return json(to_string(c.prior)); }};
    m["enhanced_ce"] = field(&RunConfig::enhanced_ce);
    m["beta1"] = field(&RunConfig::beta1);
    m["beta2"] = field(&RunConfig::beta2);
    m["weight_decay"] = field(&RunConfig::weight_decay);
    m["beta0"] = nested(&RunConfig::schedule, &diffusion::NoiseSchedule::beta0);
    m["betaT"] = nested(&RunConfig::schedule, &diffusion::NoiseSchedule::betaT);
    m["T"] = nested(&RunConfig::schedule, &diffusion::NoiseSchedule::T);
    m["steps"] = field(&RunConfig::steps);
    m["tau"] = field(&RunConfig::tau);
    m["t_min"] = field(&RunConfig::t_min);
    m["max_frames"] = field(&RunConfig::max_frames);
    m["loss.recon"] = nested(&RunConfig::loss, &losses::LossWeights::recon);
    m["loss.emb"] = nested(&RunConfig::loss, &losses::LossWeights::emb);
    m["loss.fm"] = nested(&RunConfig::loss, &losses::LossWeights::fm);
    m["loss.lyrics"] = nested(&RunConfig::loss, &losses::LossWeights::lyrics);
    m["loss.note"] = nested(&RunConfig::loss, &losses::LossWeights::note);
    m["loss.prior"] = nested(&RunConfig::loss, &losses::LossWeights::prior);
    m["loss.tau_cont"] = field(&RunConfig::tau_cont);
    m["loss.n_neg"] = field(&RunConfig::n_neg);
    m["log_every"] = field(&RunConfig::log_every);
    m["checkpoint_every"] = field(&RunConfig::checkpoint_every);
    return m;
  }();
  return f;
}

void flatten(const json& j, const std::string& prefix, std::map<std::string, json>& out) {
  for (const auto& [k, v] : j.items()) {
    const std::string key = prefix.empty() ? k : prefix + "." + k;
    if (v.is_object()) {
      flatten(v, key, out);
    } else {
      out[key] = v;
    }
  }
}

}  // namespace

RunConfig RunConfig::from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("config must be a JSON object");
  std::map<std::string, json> flat;
  flatten(j, "", flat);
  RunConfig c;
  const auto& table = fields();
  for (const auto& [key, value] : flat) {
    // "lambda_prior" is the diffusion-side name of the prior weight.
    const std::string k = key == "lambda_prior" ? "loss.prior" : key;
    auto it = table.find(k);
    if (it == table.end()) throw ValidationError("unknown config key '" + key + "'");
    try {
      it->second.set(c, value);
    } catch (const json::exception&) {
      throw ValidationError("config key '" + key + "' has the wrong type");
    }
  }
  c.validate();
  return c;
}

RunConfig RunConfig::load(const std::filesystem::path& path) { return from_json(io::read_json(path)); }

json RunConfig::to_json() const {
  json j = json::object();
  for (const auto& [key, f] : fields()) j[key] = f.get(*this);
  return j;
}

void RunConfig::validate() const {
  stft().validate();
  auto positive = [](int v, const char* name) {
    if (v < 1) throw ValidationError(std::string(name) + " must be >= 1");
  };
  if (sample_rate < 1) throw ValidationError("sample_rate must be positive");
  positive(mel_bins, "mel_bins");
  if (!(fmin >= 0.0 && fmin < fmax && fmax <= sample_rate / 2.0)) {
    throw ValidationError("mel range needs 0 <= fmin < fmax <= sample_rate/2");
  }
  if (!(mel_floor > 0.0)) throw ValidationError("mel_floor must be positive");
  if (!(f0_fmin >= 50.0 && f0_fmin < f0_fmax && f0_fmax <= 2100.0)) {
    throw ValidationError("F0 range needs 50 <= f0_fmin < f0_fmax <= 2100");
  }
  positive(latent_dim, "latent_dim");
  positive(width, "width");
  positive(quantizers, "quantizers");
  positive(codebook_size, "codebook_size");
  if (quantizers > 0xffff || codebook_size > 0xffff || latent_dim > 0xffff) {
    throw ValidationError("quantizers, codebook_size and latent_dim must fit in 16 bits");
  }
  if (!(ema_decay >= 0.0 && ema_decay < 1.0)) throw ValidationError("ema_decay must be in [0, 1)");
  positive(codec_window, "codec.window");
  if (codec_train_steps < 0 || latent_train_steps < 0) throw ValidationError("train steps must be >= 0");
  if (!(codec_lr > 0.0) || !(latent_lr > 0.0)) throw ValidationError("learning rates must be positive");
  positive(disc_width, "codec.disc_width");
  positive(blocks, "blocks");
  if (time_dim < 2 || time_dim % 2) throw ValidationError("time_dim must be even and >= 2");
  positive(cond_hidden, "cond.hidden");
  positive(cond_emb, "cond.emb_dim");
  if (cond_blocks < 0) throw ValidationError("cond.blocks must be >= 0");
  positive(feature_dim, "cond.feature_dim");
  if (f0_bins < 2) throw ValidationError("cond.f0_bins must be >= 2");
  if (latent_window < 2) throw ValidationError("latent.window must be >= 2");
  positive(latent_batch, "latent.batch");
  if (!(unlabeled_ratio >= 0.0 && unlabeled_ratio <= 1.0)) throw ValidationError("unlabeled_ratio must be in [0, 1]");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) throw ValidationError("beta1/beta2 must be in [0, 1)");
  if (!(weight_decay >= 0.0)) throw ValidationError("weight_decay must be >= 0");
  schedule.validate();
  positive(steps, "steps");
  if (!(tau > 0.0)) throw ValidationError("tau must be positive");
  if (!(t_min > 0.0 && t_min < schedule.T)) throw ValidationError("t_min must be in (0, T)");
  positive(max_frames, "max_frames");
  loss.validate();
  if (!(tau_cont > 0.0)) throw ValidationError("loss.tau_cont must be positive");
  positive(n_neg, "loss.n_neg");
  positive(log_every, "log_every");
  if (checkpoint_every < 0) throw ValidationError("checkpoint_every must be >= 0");
}

}  // namespace cantus::app

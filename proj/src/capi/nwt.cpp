#include "nwt/nwt.h"

#include "core/audio_io.hpp"
#include "core/autoencoder.hpp"
#include "core/bank.hpp"
#include "core/error.hpp"
#include "core/service.hpp"
#include "core/synth.hpp"
#include "core/wavetable.hpp"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <new>
#include <string>

struct nwt_model {
  nwt::AutoencoderModel model;
};

struct nwt_bank {
  nwt::WavetableBank bank;
};

struct nwt_service {
  std::unique_ptr<nwt::Service> service;
};

namespace {

thread_local std::string last_error;

nwt_status to_status(nwt::ErrorCode code) {
  using nwt::ErrorCode;
  switch (code) {
    case ErrorCode::InvalidArgument: return NWT_ERR_INVALID_ARGUMENT;
    case ErrorCode::ConstantInput: return NWT_ERR_CONSTANT_INPUT;
    case ErrorCode::NoPeak: return NWT_ERR_NO_PEAK;
    case ErrorCode::DimensionMismatch: return NWT_ERR_DIMENSION;
    case ErrorCode::Malformed: return NWT_ERR_MALFORMED;
    case ErrorCode::VersionMismatch: return NWT_ERR_VERSION;
    case ErrorCode::BadMagic: return NWT_ERR_BAD_MAGIC;
    case ErrorCode::Truncated: return NWT_ERR_TRUNCATED;
    case ErrorCode::Io: return NWT_ERR_IO;
    case ErrorCode::Diverged: return NWT_ERR_DIVERGED;
    case ErrorCode::EmptyScore: return NWT_ERR_EMPTY_SCORE;
  }
  return NWT_ERR_INTERNAL;
}

nwt_status set_error(nwt_status status, std::string message) {
  last_error = std::move(message);
  return status;
}

template <typename F>
nwt_status guarded(F&& f) noexcept {
  try {
    f();
    return NWT_OK;
  } catch (const nwt::Error& e) {
    return set_error(to_status(e.code()), e.what());
  } catch (const std::bad_alloc&) {
    return set_error(NWT_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return set_error(NWT_ERR_INTERNAL, e.what());
  } catch (...) {
    return set_error(NWT_ERR_INTERNAL, "unknown error");
  }
}

void require_ptr(const void* p, const char* name) {
  if (p == nullptr) nwt::fail(nwt::ErrorCode::InvalidArgument, std::string(name) + " is null");
}

std::vector<double> copy_in(const double* p, size_t n, const char* name) {
  if (n > 0) require_ptr(p, name);
  return std::vector<double>(p, p + n);
}

void copy_out(std::span<const double> src, double* dst, size_t capacity, const char* name) {
  require_ptr(dst, name);
  if (capacity < src.size()) {
    nwt::fail(nwt::ErrorCode::DimensionMismatch, std::string(name) + " holds " +
                                                     std::to_string(capacity) + " values, need " +
                                                     std::to_string(src.size()));
  }
  std::copy(src.begin(), src.end(), dst);
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* nwt_last_error(void) { return last_error.c_str(); }

const char* nwt_status_name(nwt_status status) {
  switch (status) {
    case NWT_OK: return "ok";
    case NWT_ERR_INVALID_ARGUMENT: return "invalid argument";
    case NWT_ERR_CONSTANT_INPUT: return "constant input";
    case NWT_ERR_NO_PEAK: return "no spectral peak";
    case NWT_ERR_DIMENSION: return "dimension mismatch";
    case NWT_ERR_MALFORMED: return "malformed input";
    case NWT_ERR_VERSION: return "version mismatch";
    case NWT_ERR_BAD_MAGIC: return "bad magic";
    case NWT_ERR_TRUNCATED: return "truncated";
    case NWT_ERR_IO: return "i/o error";
    case NWT_ERR_DIVERGED: return "training diverged";
    case NWT_ERR_EMPTY_SCORE: return "empty score";
    case NWT_ERR_INTERNAL: return "internal error";
  }
  return "unknown status";
}

const char* nwt_version(void) { return "1.0.0"; }

void nwt_string_free(char* s) { std::free(s); }

nwt_status nwt_gen_waveform(const char* shape, size_t length, double phase_offset, double* out) {
  return guarded([&] {
    require_ptr(shape, "shape");
    const auto w = nwt::gen_waveform(nwt::parse_shape(shape), length, phase_offset);
    copy_out(w.samples(), out, length, "out");
  });
}

nwt_status nwt_preset_waveform(const char* shape, double phase_offset, double* out) {
  return guarded([&] {
    require_ptr(shape, "shape");
    const auto w = nwt::preset_waveform(nwt::parse_shape(shape), phase_offset);
    copy_out(w.samples(), out, NWT_WAVEFORM_LEN, "out");
  });
}

nwt_status nwt_condition(const double* waveform, size_t n, int ramp_len, double* out) {
  return guarded([&] {
    const auto t = nwt::condition(nwt::Waveform(copy_in(waveform, n, "waveform")), ramp_len);
    copy_out(t.samples(), out, n + 2, "out");
  });
}

nwt_status nwt_estimate_fundamental(const double* audio, size_t n, double sample_rate, double* hz) {
  return guarded([&] {
    require_ptr(hz, "hz");
    if (n > 0) require_ptr(audio, "audio");
    *hz = nwt::estimate_fundamental(std::span(audio, n), sample_rate);
  });
}

nwt_status nwt_spectral_flatness(const double* x, size_t n, double* flatness) {
  return guarded([&] {
    require_ptr(flatness, "flatness");
    if (n > 0) require_ptr(x, "x");
    *flatness = nwt::spectral_flatness(std::span(x, n));
  });
}

void nwt_train_config_default(nwt_train_config* config) {
  if (config == nullptr) return;
  const nwt::TrainingConfig d;
  *config = nwt_train_config{};
  config->epochs = d.epochs;
  config->batch_size = d.batch_size;
  config->learning_rate = d.learning_rate;
  config->seed = d.seed;
  config->latent_dim = d.latent_dim;
  config->hidden_count = d.hidden_dims.size();
  for (size_t i = 0; i < d.hidden_dims.size(); ++i) config->hidden_dims[i] = d.hidden_dims[i];
  config->holdout_fraction = d.holdout_fraction;
  config->phases_per_shape = d.phases_per_shape;
}

nwt_status nwt_train(const nwt_train_config* config, nwt_epoch_fn on_epoch, void* user,
                     nwt_model** out, nwt_train_report* report) {
  return guarded([&] {
    require_ptr(config, "config");
    require_ptr(out, "out");
    if (config->hidden_count > NWT_MAX_HIDDEN) {
      nwt::fail(nwt::ErrorCode::InvalidArgument, "hidden_count exceeds NWT_MAX_HIDDEN");
    }
    nwt::TrainingConfig cfg;
    cfg.epochs = config->epochs;
    cfg.batch_size = config->batch_size;
    cfg.learning_rate = config->learning_rate;
    cfg.seed = config->seed;
    cfg.latent_dim = config->latent_dim;
    cfg.hidden_dims.assign(config->hidden_dims, config->hidden_dims + config->hidden_count);
    cfg.holdout_fraction = config->holdout_fraction;
    cfg.phases_per_shape = config->phases_per_shape;

    nwt::EpochCallback cb;
    if (on_epoch != nullptr) {
      cb = [on_epoch, user](std::size_t epoch, double loss) { on_epoch(epoch, loss, user); };
    }
    auto result = nwt::train(cfg, cb);
    if (report != nullptr) {
      report->epochs = result.loss_history.size();
      report->initial_loss = result.loss_history.empty() ? 0.0 : result.loss_history.front();
      report->final_loss = result.loss_history.empty() ? 0.0 : result.loss_history.back();
      report->holdout_mse = result.holdout_mse.value_or(-1.0);
      report->train_count = result.train_count;
      report->holdout_count = result.holdout_count;
    }
    *out = new nwt_model{std::move(result.model)};
  });
}

nwt_status nwt_model_load(const char* path, nwt_model** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new nwt_model{nwt::load_model(path)};
  });
}

nwt_status nwt_model_save(const nwt_model* model, const char* path) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(path, "path");
    nwt::save_model(model->model, path);
  });
}

void nwt_model_free(nwt_model* model) { delete model; }

size_t nwt_model_latent_dim(const nwt_model* model) {
  return model == nullptr ? 0 : model->model.latent_dim;
}

uint64_t nwt_model_seed(const nwt_model* model) {
  return model == nullptr ? 0 : model->model.metadata.seed;
}

nwt_status nwt_encode(const nwt_model* model, const double* waveform, size_t n, double* latent,
                      size_t latent_len) {
  return guarded([&] {
    require_ptr(model, "model");
    const auto z = nwt::encode(model->model, nwt::Waveform(copy_in(waveform, n, "waveform")));
    copy_out(z.values(), latent, latent_len, "latent");
  });
}

nwt_status nwt_decode(const nwt_model* model, const double* latent, size_t latent_len,
                      double* waveform, size_t n) {
  return guarded([&] {
    require_ptr(model, "model");
    const auto w =
        nwt::decode(model->model, nwt::LatentVector(copy_in(latent, latent_len, "latent")));
    copy_out(w.samples(), waveform, n, "waveform");
  });
}

nwt_status nwt_encode_preset(const nwt_model* model, const char* shape, double phase,
                             double* latent, size_t latent_len) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(shape, "shape");
    const auto z =
        nwt::encode(model->model, nwt::preset_waveform(nwt::parse_shape(shape), phase));
    copy_out(z.values(), latent, latent_len, "latent");
  });
}

nwt_status nwt_lerp_latent(const double* a, const double* b, size_t n, double t, double* out) {
  return guarded([&] {
    const auto z = nwt::lerp_latent(nwt::LatentVector(copy_in(a, n, "a")),
                                    nwt::LatentVector(copy_in(b, n, "b")), t);
    copy_out(z.values(), out, n, "out");
  });
}

nwt_status nwt_gradcheck(unsigned seeds, double* max_relative_error) {
  return guarded([&] {
    require_ptr(max_relative_error, "max_relative_error");
    if (seeds == 0) nwt::fail(nwt::ErrorCode::InvalidArgument, "seeds must be positive");
    double worst = 0.0;
    for (unsigned s = 0; s < seeds; ++s) {
      worst = std::max(worst, nwt::gradient_check(s).max_relative_error);
    }
    *max_relative_error = worst;
  });
}

nwt_status nwt_edge_noise(const nwt_model* model, const char* a, const char* b,
                          const double* offsets, size_t n, uint64_t seed,
                          nwt_edge_noise_row* rows) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(a, "a");
    require_ptr(b, "b");
    if (n > 0) require_ptr(rows, "rows");
    const auto result = nwt::edge_noise(model->model, nwt::parse_shape(a), nwt::parse_shape(b),
                                        copy_in(offsets, n, "offsets"), seed);
    for (size_t i = 0; i < result.size(); ++i) {
      rows[i] = {result[i].offset, result[i].on_edge_flatness, result[i].off_edge_flatness};
    }
  });
}

nwt_status nwt_bank_build(const nwt_model* model, const char* a, const char* b, size_t steps,
                          int ramp_len, nwt_bank** out) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(a, "a");
    require_ptr(b, "b");
    require_ptr(out, "out");
    *out = new nwt_bank{nwt::build_bank(model->model, nwt::parse_shape(a), nwt::parse_shape(b),
                                        steps, ramp_len)};
  });
}

nwt_status nwt_bank_build_default(const nwt_model* model, int ramp_len, nwt_bank* out[3]) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(out, "out");
    auto banks = nwt::build_default_banks(model->model, ramp_len);
    for (int i = 0; i < 3; ++i) out[i] = new nwt_bank{std::move(banks[static_cast<size_t>(i)])};
  });
}

nwt_status nwt_bank_load(const char* path, nwt_bank** out) {
  return guarded([&] {
    require_ptr(path, "path");
    require_ptr(out, "out");
    *out = new nwt_bank{nwt::load_bank(path)};
  });
}

nwt_status nwt_bank_save(const nwt_bank* bank, const char* path) {
  return guarded([&] {
    require_ptr(bank, "bank");
    require_ptr(path, "path");
    nwt::save_bank(bank->bank, path);
  });
}

void nwt_bank_free(nwt_bank* bank) { delete bank; }

size_t nwt_bank_step_count(const nwt_bank* bank) {
  return bank == nullptr ? 0 : bank->bank.step_count();
}

size_t nwt_bank_table_len(const nwt_bank* bank) {
  return bank == nullptr ? 0 : bank->bank.table_len();
}

int nwt_bank_ramp_len(const nwt_bank* bank) { return bank == nullptr ? 0 : bank->bank.ramp_len(); }

const char* nwt_bank_label(const nwt_bank* bank, int which) {
  if (bank == nullptr || which < 0 || which > 1) return nullptr;
  return bank->bank.labels()[static_cast<size_t>(which)].c_str();
}

nwt_status nwt_bank_file_name(const nwt_bank* bank, char** out) {
  return guarded([&] {
    require_ptr(bank, "bank");
    require_ptr(out, "out");
    *out = dup_string(nwt::bank_file_name(bank->bank));
  });
}

nwt_status nwt_bank_table(const nwt_bank* bank, size_t index, float* out, size_t n) {
  return guarded([&] {
    require_ptr(bank, "bank");
    require_ptr(out, "out");
    if (index >= bank->bank.step_count()) {
      nwt::fail(nwt::ErrorCode::InvalidArgument, "table index " + std::to_string(index) +
                                                     " out of range");
    }
    const auto t = bank->bank.table(index);
    if (n < t.size()) nwt::fail(nwt::ErrorCode::DimensionMismatch, "out buffer too small");
    std::copy(t.begin(), t.end(), out);
  });
}

double nwt_midi_to_hz(int note) {
  if (note < 0 || note > 127) return 0.0;
  return nwt::midi_to_hz(note);
}

nwt_status nwt_render_score_file(const nwt_bank* bank, const char* score_path,
                                 const char* wav_path, nwt_render_info* info) {
  return guarded([&] {
    require_ptr(bank, "bank");
    require_ptr(score_path, "score_path");
    require_ptr(wav_path, "wav_path");
    const auto score = nwt::load_score(score_path);
    const auto result = nwt::render_score(bank->bank, score.events, score.params, score.config);
    const auto rate = static_cast<uint32_t>(std::lround(score.config.sample_rate_hz));
    nwt::write_wav(result.audio, rate, wav_path);
    if (info != nullptr) {
      *info = {result.audio.size(), rate, result.peak_before_scaling, result.gain_applied};
    }
  });
}

nwt_status nwt_write_loop_preview(const double* table, size_t n, double freq_hz, double seconds,
                                  uint32_t sample_rate, const char* wav_path) {
  return guarded([&] {
    require_ptr(wav_path, "wav_path");
    if (!(seconds > 0.0 && seconds <= 600.0)) {
      nwt::fail(nwt::ErrorCode::InvalidArgument, "seconds must be in (0, 600]");
    }
    const auto samples = copy_in(table, n, "table");
    // A two-copy bank reads identically at any position.
    std::vector<float> t(samples.begin(), samples.end());
    const nwt::WavetableBank bank({t, t}, {"table", "table"}, 1, 0);
    nwt::RenderConfig cfg;
    cfg.sample_rate_hz = sample_rate;
    const auto count = static_cast<size_t>(std::llround(seconds * sample_rate));
    const std::vector<double> positions(count, 0.0);
    const auto audio = nwt::oscillate(bank, freq_hz, positions, cfg, count);
    nwt::write_wav(audio, sample_rate, wav_path);
  });
}

nwt_status nwt_write_wav(const double* audio, size_t n, uint32_t sample_rate, const char* path) {
  return guarded([&] {
    require_ptr(path, "path");
    if (n > 0) require_ptr(audio, "audio");
    nwt::write_wav(std::span(audio, n), sample_rate, path);
  });
}

nwt_status nwt_service_create(const nwt_model* model, const char* bank_dir,
                              const char* static_dir, nwt_service** out) {
  return guarded([&] {
    require_ptr(model, "model");
    require_ptr(bank_dir, "bank_dir");
    require_ptr(out, "out");
    auto svc = nwt::Service::from_directory(model->model, bank_dir,
                                            static_dir ? std::filesystem::path(static_dir)
                                                       : std::filesystem::path());
    *out = new nwt_service{std::move(svc)};
  });
}

void nwt_service_free(nwt_service* service) { delete service; }

nwt_status nwt_service_handle(const nwt_service* service, const char* method, const char* path,
                              const char* request_body, int* status, char** body) {
  return guarded([&] {
    require_ptr(service, "service");
    require_ptr(method, "method");
    require_ptr(path, "path");
    require_ptr(status, "status");
    require_ptr(body, "body");
    const auto r = service->service->handle(method, path, request_body ? request_body : "");
    *status = r.status;
    *body = dup_string(r.body);
  });
}

nwt_status nwt_service_bind(nwt_service* service, const char* host, int port, int* bound_port) {
  return guarded([&] {
    require_ptr(service, "service");
    require_ptr(host, "host");
    if (port < 0 || port > 65535) nwt::fail(nwt::ErrorCode::InvalidArgument, "port out of range");
    const int p = service->service->bind(host, port);
    if (bound_port != nullptr) *bound_port = p;
  });
}

nwt_status nwt_service_run(nwt_service* service) {
  return guarded([&] {
    require_ptr(service, "service");
    service->service->run();
  });
}

void nwt_service_stop(nwt_service* service) {
  if (service != nullptr) service->service->stop();
}

}  // extern "C"

/*
 * nwt: neural wavetable synthesis library, C interface.
 *
 * Objects are opaque handles owned by the caller and released with the
 * matching *_free function. Every fallible call returns an nwt_status; on
 * failure a message describing the offending argument or file is available
 * from nwt_last_error() on the calling thread until the next failing call.
 *
 * Sample buffers are caller-allocated. Waveforms are NWT_WAVEFORM_LEN
 * samples, conditioned (padded) tables NWT_TABLE_LEN samples.
 */
#ifndef NWT_NWT_H
#define NWT_NWT_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  if defined(NWT_BUILDING)
#    define NWT_API __declspec(dllexport)
#  else
#    define NWT_API __declspec(dllimport)
#  endif
#else
#  define NWT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

#define NWT_WAVEFORM_LEN 512
#define NWT_TABLE_LEN 514
#define NWT_DEFAULT_RAMP 8
#define NWT_MAX_HIDDEN 8

typedef enum nwt_status {
  NWT_OK = 0,
  NWT_ERR_INVALID_ARGUMENT = 1,
  NWT_ERR_CONSTANT_INPUT = 2,
  NWT_ERR_NO_PEAK = 3,
  NWT_ERR_DIMENSION = 4,
  NWT_ERR_MALFORMED = 5,
  NWT_ERR_VERSION = 6,
  NWT_ERR_BAD_MAGIC = 7,
  NWT_ERR_TRUNCATED = 8,
  NWT_ERR_IO = 9,
  NWT_ERR_DIVERGED = 10,
  NWT_ERR_EMPTY_SCORE = 11,
  NWT_ERR_INTERNAL = 100
} nwt_status;

typedef struct nwt_model nwt_model;
typedef struct nwt_bank nwt_bank;
typedef struct nwt_service nwt_service;

NWT_API const char* nwt_last_error(void);
NWT_API const char* nwt_status_name(nwt_status status);
NWT_API const char* nwt_version(void);

/* Strings returned through out-parameters are released with this. */
NWT_API void nwt_string_free(char* s);

/* ---- waveforms and conditioning ---------------------------------------- */

/* shape: "sine", "triangle", "saw" or "square". out holds `length` samples. */
NWT_API nwt_status nwt_gen_waveform(const char* shape, size_t length, double phase_offset,
                                    double* out);
/* Normalized canonical shape (NWT_WAVEFORM_LEN samples). */
NWT_API nwt_status nwt_preset_waveform(const char* shape, double phase_offset, double* out);
/* normalize -> pad -> smooth; out holds n + 2 samples. */
NWT_API nwt_status nwt_condition(const double* waveform, size_t n, int ramp_len, double* out);
NWT_API nwt_status nwt_estimate_fundamental(const double* audio, size_t n, double sample_rate,
                                            double* hz);
NWT_API nwt_status nwt_spectral_flatness(const double* x, size_t n, double* flatness);

/* ---- autoencoder -------------------------------------------------------- */

typedef struct nwt_train_config {
  size_t epochs;
  size_t batch_size;
  double learning_rate;
  uint64_t seed;
  size_t latent_dim;
  size_t hidden_dims[NWT_MAX_HIDDEN];
  size_t hidden_count;
  double holdout_fraction;
  size_t phases_per_shape;
} nwt_train_config;

typedef struct nwt_train_report {
  size_t epochs;
  double initial_loss;   /* first epoch mean training loss, 0 if no epochs */
  double final_loss;     /* last epoch mean training loss, 0 if no epochs */
  double holdout_mse;    /* negative when the holdout set is empty */
  size_t train_count;
  size_t holdout_count;
} nwt_train_report;

/* Called after every epoch with the epoch's mean training loss. */
typedef void (*nwt_epoch_fn)(size_t epoch, double loss, void* user);

NWT_API void nwt_train_config_default(nwt_train_config* config);
NWT_API nwt_status nwt_train(const nwt_train_config* config, nwt_epoch_fn on_epoch, void* user,
                             nwt_model** out, nwt_train_report* report);

NWT_API nwt_status nwt_model_load(const char* path, nwt_model** out);
NWT_API nwt_status nwt_model_save(const nwt_model* model, const char* path);
NWT_API void nwt_model_free(nwt_model* model);
NWT_API size_t nwt_model_latent_dim(const nwt_model* model);
NWT_API uint64_t nwt_model_seed(const nwt_model* model);

NWT_API nwt_status nwt_encode(const nwt_model* model, const double* waveform, size_t n,
                              double* latent, size_t latent_len);
NWT_API nwt_status nwt_decode(const nwt_model* model, const double* latent, size_t latent_len,
                              double* waveform, size_t n);
/* Latent of the phase-0 preset shape. */
NWT_API nwt_status nwt_encode_preset(const nwt_model* model, const char* shape, double phase,
                                     double* latent, size_t latent_len);
NWT_API nwt_status nwt_lerp_latent(const double* a, const double* b, size_t n, double t,
                                   double* out);

/* Finite-difference check over `seeds` random 8-4-2-4-8 models. */
NWT_API nwt_status nwt_gradcheck(unsigned seeds, double* max_relative_error);

typedef struct nwt_edge_noise_row {
  double offset;
  double on_edge_flatness;
  double off_edge_flatness;
} nwt_edge_noise_row;

NWT_API nwt_status nwt_edge_noise(const nwt_model* model, const char* a, const char* b,
                                  const double* offsets, size_t n, uint64_t seed,
                                  nwt_edge_noise_row* rows);

/* ---- banks -------------------------------------------------------------- */

NWT_API nwt_status nwt_bank_build(const nwt_model* model, const char* a, const char* b,
                                  size_t steps, int ramp_len, nwt_bank** out);
/* The three 100-step banks (sine,saw), (saw,triangle), (triangle,sine). */
NWT_API nwt_status nwt_bank_build_default(const nwt_model* model, int ramp_len,
                                          nwt_bank* out[3]);
NWT_API nwt_status nwt_bank_load(const char* path, nwt_bank** out);
NWT_API nwt_status nwt_bank_save(const nwt_bank* bank, const char* path);
NWT_API void nwt_bank_free(nwt_bank* bank);
NWT_API size_t nwt_bank_step_count(const nwt_bank* bank);
NWT_API size_t nwt_bank_table_len(const nwt_bank* bank);
NWT_API int nwt_bank_ramp_len(const nwt_bank* bank);
/* which: 0 or 1. The pointer lives as long as the bank. */
NWT_API const char* nwt_bank_label(const nwt_bank* bank, int which);
/* Suggested file name, e.g. "sine-saw.nwtb"; free with nwt_string_free. */
NWT_API nwt_status nwt_bank_file_name(const nwt_bank* bank, char** out);
NWT_API nwt_status nwt_bank_table(const nwt_bank* bank, size_t index, float* out, size_t n);

/* ---- rendering and audio files ------------------------------------------ */

NWT_API double nwt_midi_to_hz(int note);

typedef struct nwt_render_info {
  size_t samples;
  uint32_t sample_rate;
  double peak_before_scaling;
  double gain_applied;
} nwt_render_info;

NWT_API nwt_status nwt_render_score_file(const nwt_bank* bank, const char* score_path,
                                         const char* wav_path, nwt_render_info* info);
/* Loops one table at freq_hz for `seconds` and writes a WAV file. */
NWT_API nwt_status nwt_write_loop_preview(const double* table, size_t n, double freq_hz,
                                          double seconds, uint32_t sample_rate,
                                          const char* wav_path);
NWT_API nwt_status nwt_write_wav(const double* audio, size_t n, uint32_t sample_rate,
                                 const char* path);

/* ---- HTTP service -------------------------------------------------------- */

/* static_dir may be NULL. The service copies the model. */
NWT_API nwt_status nwt_service_create(const nwt_model* model, const char* bank_dir,
                                      const char* static_dir, nwt_service** out);
NWT_API void nwt_service_free(nwt_service* service);
/* In-process dispatch without sockets; *body is freed with nwt_string_free. */
NWT_API nwt_status nwt_service_handle(const nwt_service* service, const char* method,
                                      const char* path, const char* request_body, int* status,
                                      char** body);
/* port 0 picks a free port; the bound port is written to *bound_port. */
NWT_API nwt_status nwt_service_bind(nwt_service* service, const char* host, int port,
                                    int* bound_port);
/* Blocks until nwt_service_stop is called from another thread. */
NWT_API nwt_status nwt_service_run(nwt_service* service);
NWT_API void nwt_service_stop(nwt_service* service);

#ifdef __cplusplus
}
#endif

#endif /* NWT_NWT_H */

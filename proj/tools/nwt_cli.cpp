// nwt command-line front end. Talks to the library only through nwt.h.
//
// Exit codes: 0 success, 1 usage error, 2 data/validation error, 3 I/O error.

#include "nwt/nwt.h"

#include "CLI11.hpp"
#include "json.hpp"

#include <chrono>
#include <csignal>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <string>
#include <vector>

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitIo = 3;

const std::vector<std::string> kShapes{"sine", "triangle", "saw", "square"};

struct CommandError {
  int code;
  std::string message;
};

[[noreturn]] void usage_error(const std::string& message) { throw CommandError{kExitUsage, message}; }

/// Turns a failed library call into the matching exit code; `context` names the
/// flag or file involved.
void check(nwt_status status, const std::string& context) {
  if (status == NWT_OK) return;
  const int code = status == NWT_ERR_IO ? kExitIo : kExitData;
  throw CommandError{code, context + ": " + nwt_last_error()};
}

struct ModelDeleter {
  void operator()(nwt_model* m) const { nwt_model_free(m); }
};
struct BankDeleter {
  void operator()(nwt_bank* b) const { nwt_bank_free(b); }
};
using ModelPtr = std::unique_ptr<nwt_model, ModelDeleter>;
using BankPtr = std::unique_ptr<nwt_bank, BankDeleter>;

ModelPtr load_model(const std::string& path) {
  nwt_model* m = nullptr;
  check(nwt_model_load(path.c_str(), &m), "--model " + path);
  return ModelPtr(m);
}

std::vector<double> parse_number_array(const std::string& text, const std::string& flag) {
  const auto doc = nlohmann::json::parse(text, nullptr, false);
  if (doc.is_discarded() || !doc.is_array()) {
    usage_error(flag + ": expected a JSON array of numbers");
  }
  std::vector<double> out;
  for (const auto& v : doc) {
    if (!v.is_number()) usage_error(flag + ": expected a JSON array of numbers");
    out.push_back(v.get<double>());
  }
  return out;
}

std::string number_array(const std::vector<double>& values) {
  return nlohmann::json(values).dump();
}

bool has_extension(const std::string& path, const char* ext) {
  return std::filesystem::path(path).extension() == ext;
}

void write_table_output(const std::vector<double>& table, const std::string& out,
                        const char* source) {
  if (has_extension(out, ".wav")) {
    check(nwt_write_loop_preview(table.data(), table.size(), 440.0, 1.0, 44100, out.c_str()),
          "--out " + out);
    return;
  }
  std::ofstream f(out, std::ios::binary | std::ios::trunc);
  if (!f) throw CommandError{kExitIo, "--out " + out + ": cannot open for writing"};
  f << nlohmann::json{{"samples", table}, {"source", source}}.dump() << '\n';
  if (!f) throw CommandError{kExitIo, "--out " + out + ": write failed"};
}

std::vector<double> conditioned_decode(const nwt_model* model, const std::vector<double>& latent,
                                       int ramp, const std::string& context) {
  std::vector<double> wave(NWT_WAVEFORM_LEN);
  check(nwt_decode(model, latent.data(), latent.size(), wave.data(), wave.size()), context);
  std::vector<double> table(NWT_TABLE_LEN);
  check(nwt_condition(wave.data(), wave.size(), ramp, table.data()), context);
  return table;
}

std::vector<double> preset_latent(const nwt_model* model, const std::string& shape,
                                  const std::string& flag) {
  std::vector<double> z(nwt_model_latent_dim(model));
  check(nwt_encode_preset(model, shape.c_str(), 0.0, z.data(), z.size()), flag);
  return z;
}

nwt_service* g_service = nullptr;

extern "C" void on_signal(int) {
  if (g_service != nullptr) nwt_service_stop(g_service);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Neural wavetable synthesis: train, interpolate, pre-render and play wavetables"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Show help for all subcommands");

  // train
  auto* train = app.add_subcommand("train", "Train the autoencoder and save it");
  nwt_train_config tcfg;
  nwt_train_config_default(&tcfg);
  std::string train_out;
  bool quiet = false;
  train->add_option("--seed", tcfg.seed, "Random seed")->capture_default_str();
  train->add_option("--epochs", tcfg.epochs, "Training epochs")->capture_default_str();
  train->add_option("--latent", tcfg.latent_dim, "Latent dimension")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  train->add_option("--lr", tcfg.learning_rate, "Learning rate")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  train->add_option("--out", train_out, "Model file to write")->required();
  train->add_flag("--quiet", quiet, "No per-epoch progress on stderr");

  // gradcheck
  auto* gradcheck = app.add_subcommand("gradcheck", "Verify backprop against finite differences");
  unsigned grad_seeds = 10;
  gradcheck->add_option("--seeds", grad_seeds, "Number of random tiny models")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  // encode
  auto* enc = app.add_subcommand("encode", "Print the latent of a preset shape");
  std::string model_path, shape = "sine";
  double phase = 0.0;
  enc->add_option("--model", model_path, "Model file")->required();
  enc->add_option("--shape", shape, "Shape")->check(CLI::IsMember(kShapes))->capture_default_str();
  enc->add_option("--phase", phase, "Phase offset in cycles")
      ->check(CLI::Range(0.0, 0.999999999))
      ->capture_default_str();

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a latent into a conditioned table");
  std::string latent_text, out_path;
  int ramp = NWT_DEFAULT_RAMP;
  dec->add_option("--model", model_path, "Model file")->required();
  dec->add_option("--latent", latent_text, "Latent as a JSON array")->required();
  dec->add_option("--out", out_path, ".wav for a 1 s loop preview, otherwise a JSON table")
      ->required();
  dec->add_option("--ramp", ramp, "Smoothing ramp length")
      ->check(CLI::Range(1, NWT_TABLE_LEN / 4))
      ->capture_default_str();

  // interp
  auto* interp = app.add_subcommand("interp", "Decode one point on the edge between two presets");
  std::string shape_a = "sine", shape_b = "saw";
  double t = 0.5;
  interp->add_option("--model", model_path, "Model file")->required();
  interp->add_option("--a", shape_a, "First preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  interp->add_option("--b", shape_b, "Second preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  interp->add_option("--t", t, "Position on the edge")->check(CLI::Range(0.0, 1.0))->capture_default_str();
  interp->add_option("--out", out_path, ".wav for a 1 s loop preview, otherwise a JSON table")
      ->required();
  interp->add_option("--ramp", ramp, "Smoothing ramp length")
      ->check(CLI::Range(1, NWT_TABLE_LEN / 4))
      ->capture_default_str();

  // bank
  auto* bank = app.add_subcommand("bank", "Pre-render a bank between two presets");
  std::size_t steps = 100;
  bank->add_option("--model", model_path, "Model file")->required();
  bank->add_option("--a", shape_a, "First preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  bank->add_option("--b", shape_b, "Second preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  bank->add_option("--steps", steps, "Number of tables")->check(CLI::Range(2, 100000))->capture_default_str();
  bank->add_option("--ramp", ramp, "Smoothing ramp length")
      ->check(CLI::Range(1, NWT_TABLE_LEN / 4))
      ->capture_default_str();
  bank->add_option("--out", out_path, "Bank file to write")->required();

  // bank-default
  auto* bank_default = app.add_subcommand("bank-default", "Pre-render the three default banks");
  std::string outdir;
  bank_default->add_option("--model", model_path, "Model file")->required();
  bank_default->add_option("--outdir", outdir, "Output directory")->required();
  bank_default->add_option("--ramp", ramp, "Smoothing ramp length")
      ->check(CLI::Range(1, NWT_TABLE_LEN / 4))
      ->capture_default_str();

  // render
  auto* render = app.add_subcommand("render", "Render a score through a bank to WAV");
  std::string bank_path, score_path;
  render->add_option("--bank", bank_path, "Bank file")->required();
  render->add_option("--score", score_path, "Score file (JSON)")->required();
  render->add_option("--out", out_path, "WAV file to write")->required();

  // edge-noise
  auto* edge = app.add_subcommand("edge-noise", "Spectral flatness on vs. off the embedding edge");
  std::string offsets_text = "[0,0.5,1.0]";
  std::uint64_t edge_seed = 0;
  edge->add_option("--model", model_path, "Model file")->required();
  edge->add_option("--a", shape_a, "First preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  edge->add_option("--b", shape_b, "Second preset")->check(CLI::IsMember(kShapes))->capture_default_str();
  edge->add_option("--offsets", offsets_text, "Displacements as a JSON array")->capture_default_str();
  edge->add_option("--seed", edge_seed, "Seed for the displacement direction")->capture_default_str();

  // serve
  auto* serve = app.add_subcommand("serve", "Serve the HTTP API for the browser UI");
  std::string bankdir, host = "127.0.0.1", static_dir;
  int port = 8080;
  serve->add_option("--model", model_path, "Model file")->required();
  serve->add_option("--bankdir", bankdir, "Directory of .nwtb banks")->required();
  serve->add_option("--port", port, "TCP port (0 = any free port)")
      ->check(CLI::Range(0, 65535))
      ->capture_default_str();
  serve->add_option("--host", host, "Listen address")->capture_default_str();
  serve->add_option("--static", static_dir, "Directory of UI assets served under /");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  try {
    if (*train) {
      const auto start = std::chrono::steady_clock::now();
      struct Progress {
        bool quiet;
        std::size_t epochs;
      } progress{quiet, tcfg.epochs};
      auto on_epoch = [](std::size_t epoch, double loss, void* user) {
        const auto* p = static_cast<Progress*>(user);
        const std::size_t every = p->epochs >= 20 ? p->epochs / 20 : 1;
        if (!p->quiet && (epoch % every == 0 || epoch + 1 == p->epochs)) {
          std::fprintf(stderr, "epoch %zu/%zu loss %.6g\n", epoch + 1, p->epochs, loss);
        }
      };
      nwt_model* raw = nullptr;
      nwt_train_report report{};
      check(nwt_train(&tcfg, on_epoch, &progress, &raw, &report), "train");
      ModelPtr model(raw);
      check(nwt_model_save(model.get(), train_out.c_str()), "--out " + train_out);
      const double seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      nlohmann::json summary{{"model", train_out},
                             {"seed", tcfg.seed},
                             {"epochs", report.epochs},
                             {"initial_loss", report.initial_loss},
                             {"final_loss", report.final_loss},
                             {"train_count", report.train_count},
                             {"holdout_count", report.holdout_count},
                             {"seconds", seconds}};
      if (report.holdout_mse >= 0.0) {
        summary["holdout_mse"] = report.holdout_mse;
      } else {
        summary["holdout_mse"] = nullptr;
      }
      std::cout << summary.dump() << '\n';
    } else if (*gradcheck) {
      double err = 0.0;
      check(nwt_gradcheck(grad_seeds, &err), "gradcheck");
      std::printf("max relative error %.6g over %u models (threshold 1e-4)\n", err, grad_seeds);
      return err < 1e-4 ? 0 : kExitData;
    } else if (*enc) {
      const auto model = load_model(model_path);
      std::vector<double> z(nwt_model_latent_dim(model.get()));
      check(nwt_encode_preset(model.get(), shape.c_str(), phase, z.data(), z.size()), "--shape");
      std::cout << number_array(z) << '\n';
    } else if (*dec) {
      const auto model = load_model(model_path);
      const auto latent = parse_number_array(latent_text, "--latent");
      const auto table = conditioned_decode(model.get(), latent, ramp, "--latent");
      write_table_output(table, out_path, "decode");
    } else if (*interp) {
      const auto model = load_model(model_path);
      const auto za = preset_latent(model.get(), shape_a, "--a");
      const auto zb = preset_latent(model.get(), shape_b, "--b");
      std::vector<double> z(za.size());
      check(nwt_lerp_latent(za.data(), zb.data(), z.size(), t, z.data()), "--t");
      const auto table = conditioned_decode(model.get(), z, ramp, "--t");
      write_table_output(table, out_path, "interp");
    } else if (*bank) {
      const auto model = load_model(model_path);
      nwt_bank* raw = nullptr;
      check(nwt_bank_build(model.get(), shape_a.c_str(), shape_b.c_str(), steps, ramp, &raw),
            "bank");
      BankPtr b(raw);
      check(nwt_bank_save(b.get(), out_path.c_str()), "--out " + out_path);
      std::printf("%s: %zu tables x %zu samples\n", out_path.c_str(), nwt_bank_step_count(b.get()),
                  nwt_bank_table_len(b.get()));
    } else if (*bank_default) {
      const auto model = load_model(model_path);
      std::error_code ec;
      std::filesystem::create_directories(outdir, ec);
      if (ec) throw CommandError{kExitIo, "--outdir " + outdir + ": " + ec.message()};
      nwt_bank* raw[3] = {nullptr, nullptr, nullptr};
      check(nwt_bank_build_default(model.get(), ramp, raw), "bank-default");
      BankPtr banks[3] = {BankPtr(raw[0]), BankPtr(raw[1]), BankPtr(raw[2])};
      std::size_t total = 0;
      for (const auto& b : banks) {
        char* name = nullptr;
        check(nwt_bank_file_name(b.get(), &name), "bank-default");
        const std::string file = (std::filesystem::path(outdir) / name).string();
        nwt_string_free(name);
        check(nwt_bank_save(b.get(), file.c_str()), "--outdir " + file);
        std::printf("%s: %zu tables x %zu samples\n", file.c_str(), nwt_bank_step_count(b.get()),
                    nwt_bank_table_len(b.get()));
        total += nwt_bank_step_count(b.get());
      }
      std::printf("%zu wavetables total\n", total);
    } else if (*render) {
      nwt_bank* raw = nullptr;
      check(nwt_bank_load(bank_path.c_str(), &raw), "--bank " + bank_path);
      BankPtr b(raw);
      nwt_render_info info{};
      check(nwt_render_score_file(b.get(), score_path.c_str(), out_path.c_str(), &info),
            "--score " + score_path);
      std::printf("%s: %zu samples at %u Hz, peak %.6g, gain %.6g\n", out_path.c_str(),
                  info.samples, info.sample_rate, info.peak_before_scaling, info.gain_applied);
    } else if (*edge) {
      const auto model = load_model(model_path);
      const auto offsets = parse_number_array(offsets_text, "--offsets");
      std::vector<nwt_edge_noise_row> rows(offsets.size());
      check(nwt_edge_noise(model.get(), shape_a.c_str(), shape_b.c_str(), offsets.data(),
                           offsets.size(), edge_seed, rows.data()),
            "--offsets");
      for (const auto& r : rows) {
        std::cout << nlohmann::json{{"offset", r.offset},
                                    {"on_edge_flatness", r.on_edge_flatness},
                                    {"off_edge_flatness", r.off_edge_flatness}}
                         .dump()
                  << '\n';
      }
    } else if (*serve) {
      const auto model = load_model(model_path);
      nwt_service* svc = nullptr;
      check(nwt_service_create(model.get(), bankdir.c_str(),
                               static_dir.empty() ? nullptr : static_dir.c_str(), &svc),
            "--bankdir " + bankdir);
      std::unique_ptr<nwt_service, void (*)(nwt_service*)> guard(svc, nwt_service_free);
      int bound = 0;
      check(nwt_service_bind(svc, host.c_str(), port, &bound), "--port " + std::to_string(port));
      std::printf("listening on http://%s:%d\n", host.c_str(), bound);
      std::fflush(stdout);
      g_service = svc;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      check(nwt_service_run(svc), "serve");
      g_service = nullptr;
    }
  } catch (const CommandError& e) {
    std::fprintf(stderr, "error: %s\n", e.message.c_str());
    return e.code;
  }
  return 0;
}

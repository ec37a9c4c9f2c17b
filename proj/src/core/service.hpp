#pragma once

#include "core/autoencoder.hpp"
#include "core/bank.hpp"

#include <filesystem>
#include <memory>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace nwt {

struct HttpResponse {
  int status = 200;
  std::string body;
  std::string content_type = "application/json";
};

struct NamedBank {
  std::string name;
  WavetableBank bank;
};

/// Read-only HTTP facade over encode/decode/interpolate and pre-rendered banks.
/// State is fixed at construction; `handle` is re-entrant.
class Service {
public:
  Service(AutoencoderModel model, std::vector<NamedBank> banks,
          std::filesystem::path static_dir = {});
  ~Service();

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Loads every *.nwtb in `bank_dir`; a bank's name is its file stem.
  static std::unique_ptr<Service> from_directory(AutoencoderModel model,
                                                 const std::filesystem::path& bank_dir,
                                                 std::filesystem::path static_dir = {});

  HttpResponse handle(std::string_view method, std::string_view path,
                      std::string_view body) const;

  /// Binds the listener; port 0 picks a free port. Returns the bound port.
  int bind(const std::string& host, int port);
  /// Serves until stop() is called. Requires a prior bind().
  void run();
  void stop();

  const AutoencoderModel& model() const noexcept { return model_; }

private:
  HttpResponse presets() const;
  HttpResponse decode_route(std::string_view body) const;
  HttpResponse interp_route(std::string_view body) const;
  HttpResponse banks_route() const;
  HttpResponse bank_table_route(std::string_view name, std::string_view index) const;

  AutoencoderModel model_;
  std::vector<NamedBank> banks_;
  std::vector<std::pair<std::string, LatentVector>> presets_;
  std::filesystem::path static_dir_;

  struct Listener;
  std::unique_ptr<Listener> listener_;
};

}  // namespace nwt

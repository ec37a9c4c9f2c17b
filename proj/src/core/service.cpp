#include "core/service.hpp"

#include "core/error.hpp"

#include "httplib.h"
#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>

namespace nwt {

using nlohmann::json;

namespace {

constexpr const char* kIndexPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>nwt service</title></head>
<body><h1>nwt wavetable service</h1>
<p>No UI assets mounted. Start with <code>serve --static DIR</code> to serve the browser UI.</p>
<ul>
<li>GET /api/presets</li>
<li>POST /api/decode {"latent": [...], "ramp_len": 8}</li>
<li>POST /api/interp {"a": "sine", "b": "saw", "t": 0.5}</li>
<li>GET /api/banks</li>
<li>GET /api/banks/{name}/tables/{i}</li>
</ul></body></html>
)";

HttpResponse json_response(int status, const json& body) {
  return HttpResponse{status, body.dump(), "application/json"};
}

HttpResponse error_response(int status, const std::string& message) {
  return json_response(status, json{{"error", message}});
}

// Thrown inside request handlers and turned into a 4xx body.
struct RequestError {
  int status;
  std::string message;
};

[[noreturn]] void reject(int status, std::string message) {
  throw RequestError{status, std::move(message)};
}

json parse_body(std::string_view body) {
  json doc = json::parse(body.begin(), body.end(), nullptr, false);
  if (doc.is_discarded()) reject(400, "body: malformed JSON");
  if (!doc.is_object()) reject(400, "body: expected a JSON object");
  return doc;
}

std::vector<double> latent_values(const json& v, const char* field, std::size_t dim) {
  if (!v.is_array()) reject(422, std::string(field) + ": expected an array of numbers");
  std::vector<double> out;
  for (const auto& e : v) {
    if (!e.is_number()) reject(422, std::string(field) + ": expected an array of numbers");
    const double x = e.get<double>();
    if (!std::isfinite(x)) reject(422, std::string(field) + ": values must be finite");
    out.push_back(x);
  }
  if (out.size() != dim) {
    reject(422, std::string(field) + ": expected " + std::to_string(dim) + " values, got " +
                    std::to_string(out.size()));
  }
  return out;
}

int ramp_from(const json& doc) {
  const auto it = doc.find("ramp_len");
  if (it == doc.end()) return kDefaultRampLength;
  if (!it->is_number_integer()) reject(422, "ramp_len: expected an integer");
  const auto v = it->get<std::int64_t>();
  if (v < 1 || v > static_cast<std::int64_t>(kPaddedLength / 4)) {
    reject(422, "ramp_len: must be in [1, " + std::to_string(kPaddedLength / 4) + "]");
  }
  return static_cast<int>(v);
}

json table_body(const PaddedWavetable& table, const char* source) {
  return json{{"samples", std::vector<double>(table.samples().begin(), table.samples().end())},
              {"source", source}};
}

std::vector<std::string_view> split_path(std::string_view path) {
  std::vector<std::string_view> parts;
  while (!path.empty()) {
    if (path.front() == '/') {
      path.remove_prefix(1);
      continue;
    }
    const auto end = path.find('/');
    parts.push_back(path.substr(0, end));
    if (end == std::string_view::npos) break;
    path.remove_prefix(end);
  }
  return parts;
}

}  // namespace

struct Service::Listener {
  httplib::Server server;
  bool bound = false;
};

Service::Service(AutoencoderModel model, std::vector<NamedBank> banks,
                 std::filesystem::path static_dir)
    : model_(std::move(model)),
      banks_(std::move(banks)),
      static_dir_(std::move(static_dir)),
      listener_(std::make_unique<Listener>()) {
  model_.validate();
  if (model_.signal_length() != kWaveformLength) {
    fail(ErrorCode::DimensionMismatch, "service requires a model over 512-sample waveforms");
  }
  for (Shape s : kAllShapes) {
    presets_.emplace_back(std::string(shape_name(s)), encode(model_, preset_waveform(s)));
  }
  for (const auto& b : banks_) {
    if (b.bank.table_len() != kPaddedLength) {
      fail(ErrorCode::Malformed, "bank '" + b.name + "' has table length " +
                                     std::to_string(b.bank.table_len()));
    }
  }
}

Service::~Service() = default;

std::unique_ptr<Service> Service::from_directory(AutoencoderModel model,
                                                 const std::filesystem::path& bank_dir,
                                                 std::filesystem::path static_dir) {
  std::error_code ec;
  if (!std::filesystem::is_directory(bank_dir, ec)) {
    fail(ErrorCode::Io, "bank directory '" + bank_dir.string() + "' does not exist");
  }
  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(bank_dir)) {
    if (entry.is_regular_file() && entry.path().extension() == ".nwtb") {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  std::vector<NamedBank> banks;
  for (const auto& f : files) banks.push_back({f.stem().string(), load_bank(f)});
  return std::make_unique<Service>(std::move(model), std::move(banks), std::move(static_dir));
}

HttpResponse Service::handle(std::string_view method, std::string_view path,
                             std::string_view body) const {
  if (const auto q = path.find('?'); q != std::string_view::npos) path = path.substr(0, q);
  const auto parts = split_path(path);
  try {
    if (method == "OPTIONS") return HttpResponse{204, "", "text/plain"};
    if (parts.empty()) {
      if (method == "GET") return HttpResponse{200, kIndexPage, "text/html; charset=utf-8"};
      reject(405, "method: " + std::string(method) + " not allowed on /");
    }
    if (parts[0] != "api") reject(404, "path: no route for " + std::string(path));

    auto expect = [&](std::string_view wanted) {
      if (method != wanted) {
        reject(405, "method: " + std::string(method) + " not allowed on " + std::string(path));
      }
    };
    if (parts.size() == 2 && parts[1] == "presets") {
      expect("GET");
      return presets();
    }
    if (parts.size() == 2 && parts[1] == "decode") {
      expect("POST");
      return decode_route(body);
    }
    if (parts.size() == 2 && parts[1] == "interp") {
      expect("POST");
      return interp_route(body);
    }
    if (parts.size() == 2 && parts[1] == "banks") {
      expect("GET");
      return banks_route();
    }
    if (parts.size() == 5 && parts[1] == "banks" && parts[3] == "tables") {
      expect("GET");
      return bank_table_route(parts[2], parts[4]);
    }
    reject(404, "path: no route for " + std::string(path));
  } catch (const RequestError& e) {
    return error_response(e.status, e.message);
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ConstantInput) return error_response(409, std::string("latent: ") + e.what());
    return error_response(422, e.what());
  } catch (const std::exception& e) {
    return error_response(500, std::string("internal: ") + e.what());
  }
}

HttpResponse Service::presets() const {
  json list = json::array();
  for (const auto& [name, latent] : presets_) {
    list.push_back({{"name", name},
                    {"latent", std::vector<double>(latent.values().begin(), latent.values().end())}});
  }
  return json_response(200, json{{"presets", list}});
}

HttpResponse Service::decode_route(std::string_view body) const {
  const json doc = parse_body(body);
  const auto it = doc.find("latent");
  if (it == doc.end()) reject(422, "latent: required");
  const LatentVector z(latent_values(*it, "latent", model_.latent_dim));
  const int ramp = ramp_from(doc);
  return json_response(200, table_body(condition(decode(model_, z), ramp), "decode"));
}

HttpResponse Service::interp_route(std::string_view body) const {
  const json doc = parse_body(body);
  auto endpoint = [&](const char* field) -> LatentVector {
    const auto it = doc.find(field);
    if (it == doc.end()) reject(422, std::string(field) + ": required");
    if (it->is_string()) {
      const auto name = it->get<std::string>();
      for (const auto& [preset, latent] : presets_) {
        if (preset == name) return latent;
      }
      reject(422, std::string(field) + ": unknown preset '" + name + "'");
    }
    return LatentVector(latent_values(*it, field, model_.latent_dim));
  };
  const LatentVector a = endpoint("a");
  const LatentVector b = endpoint("b");
  const auto t_it = doc.find("t");
  if (t_it == doc.end() || !t_it->is_number()) reject(422, "t: expected a number in [0, 1]");
  const double t = t_it->get<double>();
  if (!(t >= 0.0 && t <= 1.0)) reject(422, "t: must be in [0, 1]");
  const int ramp = ramp_from(doc);

  json out = table_body(condition(decode(model_, lerp_latent(a, b, t)), ramp), "interp");
  out["t"] = t;
  return json_response(200, out);
}

HttpResponse Service::banks_route() const {
  json list = json::array();
  for (const auto& [name, bank] : banks_) {
    list.push_back({{"name", name},
                    {"step_count", bank.step_count()},
                    {"table_len", bank.table_len()},
                    {"labels", {bank.labels()[0], bank.labels()[1]}},
                    {"ramp_len", bank.ramp_len()},
                    {"model_seed", bank.model_seed()}});
  }
  return json_response(200, json{{"banks", list}});
}

HttpResponse Service::bank_table_route(std::string_view name, std::string_view index) const {
  const auto it = std::find_if(banks_.begin(), banks_.end(),
                               [&](const NamedBank& b) { return b.name == name; });
  if (it == banks_.end()) reject(404, "name: unknown bank '" + std::string(name) + "'");
  std::size_t i = 0;
  const auto [end, ec] = std::from_chars(index.data(), index.data() + index.size(), i);
  if (ec != std::errc{} || end != index.data() + index.size()) {
    reject(404, "index: '" + std::string(index) + "' is not a table index");
  }
  if (i >= it->bank.step_count()) {
    reject(404, "index: " + std::to_string(i) + " out of range for " +
                    std::to_string(it->bank.step_count()) + " tables");
  }
  const auto table = it->bank.table(i);
  return json_response(200, json{{"samples", std::vector<double>(table.begin(), table.end())}});
}

int Service::bind(const std::string& host, int port) {
  auto& server = listener_->server;
  auto cors = [](httplib::Response& res) {
    res.set_header("Access-Control-Allow-Origin", "*");
    res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    res.set_header("Access-Control-Allow-Headers", "Content-Type");
  };
  auto dispatch = [this, cors](const httplib::Request& req, httplib::Response& res) {
    const HttpResponse r = handle(req.method, req.path, req.body);
    res.status = r.status;
    cors(res);
    if (r.status != 204) res.set_content(r.body, r.content_type);
  };
  if (!static_dir_.empty()) {
    if (!server.set_mount_point("/", static_dir_.string())) {
      fail(ErrorCode::Io, "static directory '" + static_dir_.string() + "' does not exist");
    }
  }
  server.Get("/api/.*", dispatch);
  server.Post("/api/.*", dispatch);
  server.Options(".*", dispatch);
  if (static_dir_.empty()) server.Get("/", dispatch);

  int bound = port;
  if (port == 0) {
    bound = server.bind_to_any_port(host);
  } else if (!server.bind_to_port(host, port)) {
    bound = -1;
  }
  if (bound < 0) fail(ErrorCode::Io, "cannot bind " + host + ":" + std::to_string(port));
  listener_->bound = true;
  return bound;
}

void Service::run() {
  if (!listener_->bound) fail(ErrorCode::InvalidArgument, "service is not bound to a port");
  listener_->server.listen_after_bind();
}

void Service::stop() { listener_->server.stop(); }

}  // namespace nwt

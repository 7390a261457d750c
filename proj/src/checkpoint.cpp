#include "hiertag/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <json.hpp>

#include "hiertag/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "checkpoint payload is written as native little-endian doubles");

namespace hiertag {

namespace {

constexpr char kMagic[6] = {'H', 'T', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

std::string fingerprint_hex(std::uint64_t fp) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fp));
  return buf;
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw IoError("checkpoint truncated");
  return v;
}

}  // namespace

void save_checkpoint(const HeadModel& model, const std::string& path) {
  nlohmann::ordered_json header;
  header["variant"] = variant_name(model.variant());
  header["input_dim"] = model.dims().input_dim;
  header["encoder_hidden"] = model.dims().encoder_hidden;
  header["hierarchy"] = nlohmann::ordered_json::parse(model.hierarchy().to_json());
  header["hierarchy_fingerprint"] = fingerprint_hex(model.hierarchy().fingerprint());
  auto params = nlohmann::ordered_json::array();
  model.for_each_param([&params](const std::string& name, const Matrix& value) {
    params.push_back({{"name", name}, {"rows", value.rows()}, {"cols", value.cols()}});
  });
  header["params"] = std::move(params);
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out.write(kMagic, sizeof(kMagic));
  write_pod(out, kVersion);
  write_pod(out, static_cast<std::uint64_t>(header_text.size()));
  out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
  model.for_each_param([&out](const std::string&, const Matrix& value) {
    out.write(reinterpret_cast<const char*>(value.data()),
              static_cast<std::streamsize>(value.size() * sizeof(double)));
  });
  out.flush();
  if (!out) throw IoError("failed writing checkpoint '" + path + "'");
}

HeadModel load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFile("checkpoint '" + path + "' not found");

  char magic[sizeof(kMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::string_view(magic, sizeof(magic)) != std::string_view(kMagic, sizeof(kMagic))) {
    throw IoError("'" + path + "' is not a checkpoint file");
  }
  const auto version = read_pod<std::uint32_t>(in);
  if (version != kVersion) {
    throw IoError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto header_len = read_pod<std::uint64_t>(in);
  std::string header_text(header_len, '\0');
  in.read(header_text.data(), static_cast<std::streamsize>(header_len));
  if (!in) throw IoError("checkpoint truncated");

  nlohmann::ordered_json header;
  try {
    header = nlohmann::ordered_json::parse(header_text);
  } catch (const nlohmann::ordered_json::parse_error&) {
    throw IoError("checkpoint header is not valid JSON");
  }

  Hierarchy hierarchy = Hierarchy::parse(header.at("hierarchy").dump());
  if (fingerprint_hex(hierarchy.fingerprint()) !=
      header.at("hierarchy_fingerprint").get<std::string>()) {
    throw IoError("checkpoint hierarchy fingerprint does not match its content");
  }
  ModelDims dims;
  dims.input_dim = header.at("input_dim").get<int>();
  dims.encoder_hidden = header.at("encoder_hidden").get<std::vector<int>>();
  const Variant variant = variant_from_name(header.at("variant").get<std::string>());

  HeadModel model(variant, dims, std::move(hierarchy), /*seed=*/0);
  const auto& params = header.at("params");
  if (static_cast<int>(params.size()) != model.param_count()) {
    throw IoError("checkpoint parameter list does not match the variant");
  }
  for (int i = 0; i < model.param_count(); ++i) {
    const auto& meta = params[static_cast<std::size_t>(i)];
    Matrix& value = model.param_value(i);
    if (meta.at("name").get<std::string>() != model.param_name(i) ||
        meta.at("rows").get<int>() != value.rows() || meta.at("cols").get<int>() != value.cols()) {
      throw IoError("checkpoint parameter '" + meta.at("name").get<std::string>() +
                    "' does not match the expected layout");
    }
    in.read(reinterpret_cast<char*>(value.data()),
            static_cast<std::streamsize>(value.size() * sizeof(double)));
    if (!in) throw IoError("checkpoint truncated");
  }
  return model;
}

}  // namespace hiertag

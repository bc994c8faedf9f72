#pragma once

// Run manifests written next to every output: command, resolved
// configuration, SHA-256 of each input file, tool version. No timestamps or
// host data, so equal inputs and flags give byte-identical manifests.

#include <array>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <string>

#include <json.hpp>
#include <openssl/evp.h>

#include "ontox/error.hpp"

namespace ontox {

inline constexpr const char* kToolVersion = "0.1.0";

inline std::string sha256_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path + "' for hashing");

  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("sha256 init failed");
  }
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    const auto got = in.gcount();
    if (got > 0 && EVP_DigestUpdate(ctx.get(), buf.data(), static_cast<std::size_t>(got)) != 1) {
      throw std::runtime_error("sha256 update failed");
    }
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_DigestFinal_ex(ctx.get(), md.data(), &len) != 1) throw std::runtime_error("sha256 final failed");

  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[md[i] >> 4];
    out += hex[md[i] & 0xf];
  }
  return out;
}

struct RunManifest {
  std::string command;
  nlohmann::ordered_json config = nlohmann::ordered_json::object();
  std::map<std::string, std::string> input_digests;  // path -> "sha256:<hex>"
  std::string tool_version = kToolVersion;

  void add_input(const std::string& path) { input_digests[path] = "sha256:" + sha256_file(path); }

  nlohmann::ordered_json to_json() const {
    nlohmann::ordered_json j;
    j["command"] = command;
    j["config"] = config;
    j["inputs"] = nlohmann::ordered_json::object();
    for (const auto& [path, digest] : input_digests) j["inputs"][path] = digest;
    j["tool_version"] = tool_version;
    return j;
  }

  // Writes `<output>.manifest.json`.
  void write_for(const std::string& output_path) const {
    const auto path = output_path + ".manifest.json";
    std::ofstream out(path);
    if (!out) throw InputError("cannot write manifest '" + path + "'");
    out << to_json().dump(2) << '\n';
  }
};

}  // namespace ontox

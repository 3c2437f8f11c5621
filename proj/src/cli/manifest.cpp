#include "cli/manifest.hpp"

#include <openssl/evp.h>

#include <chrono>
#include <ctime>
#include <fstream>
#include <memory>

#include "dynroc/error.hpp"

namespace dynroc::cli {

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::io, "cannot read '" + path.string() + "' for hashing");
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), EVP_MD_CTX_free);
  EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr);
  char buffer[1 << 16];
  while (in) {
    in.read(buffer, sizeof(buffer));
    if (in.gcount() > 0) EVP_DigestUpdate(ctx.get(), buffer, static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int length = 0;
  EVP_DigestFinal_ex(ctx.get(), digest, &length);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < length; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xf];
  }
  return out;
}

void RunManifest::write(const std::filesystem::path& dir) const {
  nlohmann::ordered_json doc;
  doc["command"] = command;
  doc["tool_version"] = DYNROC_VERSION;
  doc["seed"] = seed;
  doc["parameters"] = parameters;
  auto digests = [](const std::vector<std::filesystem::path>& paths) {
    nlohmann::ordered_json list = nlohmann::ordered_json::array();
    for (const auto& p : paths) list.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    return list;
  };
  doc["inputs"] = digests(inputs);
  doc["outputs"] = digests(outputs);
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char stamp[32];
  std::tm utc{};
  gmtime_r(&now, &utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &utc);
  doc["timestamp"] = stamp;

  const auto path = dir / "manifest.json";
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::io, "cannot write '" + path.string() + "'");
  out << doc.dump(2) << '\n';
}

}  // namespace dynroc::cli

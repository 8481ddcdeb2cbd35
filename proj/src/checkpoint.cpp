#include "mzet/checkpoint.hpp"

#include <openssl/evp.h>

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

#include "mzet/errors.hpp"

namespace mzet {
namespace {

constexpr char kMagic[8] = {'M', 'Z', 'E', 'T', 'C', 'K', 'P', 'T'};

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

void PutU32(std::ostream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }

uint32_t GetU32(std::istream& in) {
  uint32_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), 4)) throw LoadError("truncated checkpoint");
  return v;
}

std::string GetBytes(std::istream& in, uint32_t n) {
  std::string s(n, '\0');
  if (n && !in.read(s.data(), n)) throw LoadError("truncated checkpoint");
  return s;
}

}  // namespace

void WriteCheckpoint(const std::filesystem::path& path, const std::string& manifest,
                     const ModelParams& params) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw LoadError("cannot write checkpoint: " + path.string());
  out.write(kMagic, sizeof kMagic);
  PutU32(out, kCheckpointVersion);
  PutU32(out, static_cast<uint32_t>(manifest.size()));
  out.write(manifest.data(), static_cast<std::streamsize>(manifest.size()));
  const auto tensors = params.Tensors();
  PutU32(out, static_cast<uint32_t>(tensors.size()));
  std::vector<float> buf;
  for (const auto& [name, m] : tensors) {
    PutU32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    PutU32(out, static_cast<uint32_t>(m->rows()));
    PutU32(out, static_cast<uint32_t>(m->cols()));
    buf.resize(static_cast<size_t>(m->size()));
    size_t k = 0;
    for (Eigen::Index r = 0; r < m->rows(); ++r)
      for (Eigen::Index c = 0; c < m->cols(); ++c) buf[k++] = static_cast<float>((*m)(r, c));
    out.write(reinterpret_cast<const char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4));
  }
  if (!out) throw LoadError("failed writing checkpoint: " + path.string());
}

Checkpoint ReadCheckpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot open checkpoint: " + path.string());
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kMagic, 8) != 0) {
    throw VersionError(path.string() + " is not an mzet checkpoint");
  }
  const uint32_t version = GetU32(in);
  if (version != kCheckpointVersion) {
    throw VersionError("checkpoint version " + std::to_string(version) + " is not supported (expected " +
                       std::to_string(kCheckpointVersion) + ")");
  }
  Checkpoint ckpt;
  ckpt.manifest = GetBytes(in, GetU32(in));
  const uint32_t count = GetU32(in);
  std::vector<float> buf;
  for (uint32_t t = 0; t < count; ++t) {
    std::string name = GetBytes(in, GetU32(in));
    const uint32_t rows = GetU32(in);
    const uint32_t cols = GetU32(in);
    buf.resize(static_cast<size_t>(rows) * cols);
    if (!buf.empty() && !in.read(reinterpret_cast<char*>(buf.data()), static_cast<std::streamsize>(buf.size() * 4))) {
      throw LoadError("truncated checkpoint tensor '" + name + "'");
    }
    Mat m(rows, cols);
    size_t k = 0;
    for (uint32_t r = 0; r < rows; ++r)
      for (uint32_t c = 0; c < cols; ++c) m(r, c) = buf[k++];
    ckpt.tensors.emplace_back(std::move(name), std::move(m));
  }
  return ckpt;
}

void AssignTensors(const Checkpoint& ckpt, ModelParams* params) {
  std::map<std::string, const Mat*> by_name;
  for (const auto& [name, m] : ckpt.tensors) by_name[name] = &m;
  for (auto& t : params->Tensors()) {
    auto it = by_name.find(t.name);
    if (it == by_name.end()) throw VersionError("incompatible checkpoint: missing tensor '" + t.name + "'");
    const Mat& src = *it->second;
    if (src.rows() != t.value->rows() || src.cols() != t.value->cols()) {
      throw VersionError("incompatible checkpoint: tensor '" + t.name + "' is " + std::to_string(src.rows()) +
                         "x" + std::to_string(src.cols()) + ", model expects " +
                         std::to_string(t.value->rows()) + "x" + std::to_string(t.value->cols()));
    }
    *t.value = src;
  }
}

namespace {

std::string Hex(const unsigned char* d, unsigned n) {
  static const char* kDigits = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < n; ++i) {
    out += kDigits[d[i] >> 4];
    out += kDigits[d[i] & 15];
  }
  return out;
}

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) { EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr); }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  Digest(const Digest&) = delete;
  Digest& operator=(const Digest&) = delete;
  void Update(const void* p, size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string Final() {
    std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
    unsigned n = 0;
    EVP_DigestFinal_ex(ctx_, md.data(), &n);
    return Hex(md.data(), n);
  }

 private:
  EVP_MD_CTX* ctx_;
};

}  // namespace

std::string Sha256Hex(std::string_view data) {
  Digest d;
  d.Update(data.data(), data.size());
  return d.Final();
}

std::string Sha256File(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw LoadError("cannot read for digest: " + path.string());
  Digest d;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    if (in.gcount() > 0) d.Update(buf.data(), static_cast<size_t>(in.gcount()));
  }
  return d.Final();
}

}  // namespace mzet

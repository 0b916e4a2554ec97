#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <memory>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfad/crc32.hpp"
#include "nfad/model_io.hpp"

namespace nfad {

namespace {

using nlohmann::json;

const char kMagic[5] = {'N', 'F', 'A', 'D', '1'};
const std::uint32_t kVersion = 1;
const std::uint8_t kKindFlow = 0;
const std::uint8_t kKindClassifier = 1;

std::uint32_t crc32(const std::vector<unsigned char>& data) {
  return crc32_bytes(data.data(), data.size());
}

void put_u32(std::vector<unsigned char>& buf, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) buf.push_back((v >> (8 * i)) & 0xFFu);
}

void put_u64(std::vector<unsigned char>& buf, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) buf.push_back((v >> (8 * i)) & 0xFFu);
}

void put_f64(std::vector<unsigned char>& buf, double v) {
  put_u64(buf, std::bit_cast<std::uint64_t>(v));
}

class Reader {
 public:
  explicit Reader(std::vector<unsigned char> data) : data_(std::move(data)) {}

  std::size_t remaining() const { return data_.size() - pos_; }
  const std::vector<unsigned char>& bytes() const { return data_; }

  void take(void* dst, std::size_t n) {
    if (remaining() < n) throw std::runtime_error("truncated model file");
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(byte()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(byte()) << (8 * i);
    return v;
  }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string str(std::size_t n) {
    if (remaining() < n) throw std::runtime_error("truncated model file");
    std::string s(reinterpret_cast<const char*>(data_.data() + pos_), n);
    pos_ += n;
    return s;
  }

 private:
  unsigned char byte() {
    if (remaining() < 1) throw std::runtime_error("truncated model file");
    return data_[pos_++];
  }
  std::vector<unsigned char> data_;
  std::size_t pos_ = 0;
};

void write_file(const std::string& path, std::vector<unsigned char>& buf) {
  const std::uint32_t sum = crc32(buf);
  put_u32(buf, sum);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out.write(reinterpret_cast<const char*>(buf.data()),
            static_cast<std::streamsize>(buf.size()));
  if (!out) throw std::runtime_error("write failed: " + path);
}

Reader read_checked(const std::string& path, std::uint8_t want_kind,
                    json* desc, Standardizer* scaler) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open: " + path);
  std::vector<unsigned char> data(
      (std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (data.size() < sizeof(kMagic) + 4 + 1 + 4)
    throw std::runtime_error("truncated model file: " + path);

  const std::uint32_t stored = static_cast<std::uint32_t>(data[data.size() - 4]) |
                               static_cast<std::uint32_t>(data[data.size() - 3]) << 8 |
                               static_cast<std::uint32_t>(data[data.size() - 2]) << 16 |
                               static_cast<std::uint32_t>(data[data.size() - 1]) << 24;
  data.resize(data.size() - 4);
  if (crc32(data) != stored)
    throw std::runtime_error("model file checksum mismatch: " + path);

  Reader r(std::move(data));
  char magic[5];
  r.take(magic, 5);
  if (std::memcmp(magic, kMagic, 5) != 0)
    throw std::runtime_error("not a model file (bad magic): " + path);
  if (r.u32() != kVersion)
    throw std::runtime_error("unsupported model format version: " + path);
  std::uint8_t kind;
  r.take(&kind, 1);
  if (kind != want_kind)
    throw std::runtime_error(
        std::string("model file holds a ") +
        (kind == kKindFlow ? "flow" : "classifier") + ", expected a " +
        (want_kind == kKindFlow ? "flow" : "classifier") + ": " + path);

  const std::uint32_t dlen = r.u32();
  *desc = json::parse(r.str(dlen));

  const std::uint32_t d = r.u32();
  scaler->mean.resize(d);
  scaler->std.resize(d);
  for (std::uint32_t j = 0; j < d; ++j) scaler->mean(j) = r.f64();
  for (std::uint32_t j = 0; j < d; ++j) scaler->std(j) = r.f64();
  return r;
}

void append_common(std::vector<unsigned char>& buf, std::uint8_t kind,
                   const json& desc, const Standardizer& scaler) {
  buf.insert(buf.end(), kMagic, kMagic + 5);
  put_u32(buf, kVersion);
  buf.push_back(kind);
  const std::string dstr = desc.dump();
  put_u32(buf, static_cast<std::uint32_t>(dstr.size()));
  buf.insert(buf.end(), dstr.begin(), dstr.end());
  put_u32(buf, static_cast<std::uint32_t>(scaler.mean.size()));
  for (long j = 0; j < scaler.mean.size(); ++j) put_f64(buf, scaler.mean(j));
  for (long j = 0; j < scaler.std.size(); ++j) put_f64(buf, scaler.std(j));
}

void append_params(std::vector<unsigned char>& buf,
                   const std::vector<ParamRef>& params) {
  std::uint64_t count = 0;
  for (const auto& p : params) count += static_cast<std::uint64_t>(p.size);
  put_u64(buf, count);
  for (const auto& p : params)
    for (long i = 0; i < p.size; ++i) put_f64(buf, p.value[i]);
}

void read_params(Reader& r, const std::vector<ParamRef>& params,
                 const std::string& path) {
  std::uint64_t expect = 0;
  for (const auto& p : params) expect += static_cast<std::uint64_t>(p.size);
  if (r.u64() != expect)
    throw std::runtime_error("model parameter count mismatch: " + path);
  for (const auto& p : params)
    for (long i = 0; i < p.size; ++i) p.value[i] = r.f64();
}

std::vector<bool> mask_from_json(const json& arr) {
  std::vector<bool> mask;
  for (const auto& v : arr) mask.push_back(v.get<int>() != 0);
  return mask;
}

std::unique_ptr<FlowLayer> layer_from_json(const json& j) {
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "affine")
    return std::make_unique<AffineCoupling>(
        mask_from_json(j.at("mask")), j.at("hidden").get<std::vector<int>>(),
        j.at("scale_clamp").get<double>());
  if (kind == "rqs")
    return std::make_unique<RqsCoupling>(
        mask_from_json(j.at("mask")), j.at("hidden").get<std::vector<int>>(),
        j.at("bins").get<int>(), j.at("bound").get<double>());
  if (kind == "permutation")
    return std::make_unique<Permutation>(j.at("perm").get<std::vector<int>>());
  throw std::runtime_error("unknown flow layer kind in model file: " + kind);
}

}  // namespace

void save_flow(const std::string& path, FlowStack& flow,
               const Standardizer& scaler) {
  require(scaler.dim() == flow.dim(), "save_flow: standardizer dim mismatch");
  json desc;
  desc["dim"] = flow.dim();
  desc["layers"] = json::array();
  for (std::size_t i = 0; i < flow.size(); ++i)
    desc["layers"].push_back(flow.layer(i).describe());

  std::vector<unsigned char> buf;
  append_common(buf, kKindFlow, desc, scaler);
  append_params(buf, flow.params());
  write_file(path, buf);
}

FlowModel load_flow(const std::string& path) {
  json desc;
  Standardizer scaler;
  Reader r = read_checked(path, kKindFlow, &desc, &scaler);

  FlowStack flow(desc.at("dim").get<int>());
  for (const auto& lj : desc.at("layers")) flow.add(layer_from_json(lj));
  read_params(r, flow.params(), path);
  return FlowModel{std::move(flow), std::move(scaler)};
}

void save_classifier(const std::string& path, MlpClassifier& clf,
                     const Standardizer& scaler) {
  require(scaler.dim() == clf.dim(),
          "save_classifier: standardizer dim mismatch");
  json desc;
  desc["dim"] = clf.dim();

  std::vector<unsigned char> buf;
  append_common(buf, kKindClassifier, desc, scaler);
  append_params(buf, clf.net().params());
  write_file(path, buf);
}

ClfModel load_classifier(const std::string& path) {
  json desc;
  Standardizer scaler;
  Reader r = read_checked(path, kKindClassifier, &desc, &scaler);

  ClfModel m{MlpClassifier(desc.at("dim").get<int>()), std::move(scaler)};
  read_params(r, m.clf.net().params(), path);
  return m;
}

}  // namespace nfad

#include "hvs/weights.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>
#include <stdexcept>

namespace hvs {

namespace {

void put_u32(std::vector<unsigned char>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<unsigned char>((v >> (8 * i)) & 0xffu));
}

void put_string(std::vector<unsigned char>& out, const std::string& s) {
  put_u32(out, static_cast<std::uint32_t>(s.size()));
  out.insert(out.end(), s.begin(), s.end());
}

class Reader {
 public:
  explicit Reader(std::span<const unsigned char> bytes) : bytes_(bytes) {}

  bool done() const { return pos_ == bytes_.size(); }

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }

  std::string str() {
    const std::uint32_t n = u32();
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }

  float f32() { return std::bit_cast<float>(u32()); }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw std::runtime_error("weights: truncated file");
  }

  std::span<const unsigned char> bytes_;
  std::size_t pos_ = 0;
};

std::string meta_line(const TrainingMeta& meta) {
  std::ostringstream os;
  os.precision(17);
  os << "meta epochs=" << meta.epochs << " final_loss=" << meta.final_loss << " seed=" << meta.seed << "\n";
  return os.str();
}

TrainingMeta parse_meta(const std::string& descriptor) {
  TrainingMeta meta;
  std::istringstream in(descriptor);
  std::string line;
  while (std::getline(in, line)) {
    if (line.rfind("meta ", 0) != 0) continue;
    std::istringstream ls(line.substr(5));
    std::string tok;
    while (ls >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) throw std::runtime_error("weights: bad meta field '" + tok + "'");
      const std::string key = tok.substr(0, eq);
      const std::string val = tok.substr(eq + 1);
      if (key == "epochs") {
        meta.epochs = std::stoi(val);
      } else if (key == "final_loss") {
        meta.final_loss = std::stod(val);
      } else if (key == "seed") {
        meta.seed = std::stoull(val);
      }
    }
  }
  return meta;
}

}  // namespace

std::vector<unsigned char> encode_weights(const PolicyModel& model) {
  model.validate();
  std::vector<unsigned char> out = {'H', 'V', 'S', 'W'};
  put_u32(out, kWeightsVersion);
  put_string(out, model.arch.describe() + meta_line(model.meta));
  for (const Tensor& t : model.params) {
    put_string(out, t.name);
    put_u32(out, static_cast<std::uint32_t>(t.shape.size()));
    for (auto d : t.shape) put_u32(out, static_cast<std::uint32_t>(d));
    for (double v : t.values) put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

PolicyModel decode_weights(std::span<const unsigned char> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), "HVSW", 4) != 0) {
    throw std::runtime_error("weights: bad magic");
  }
  Reader in(bytes.subspan(4));
  const std::uint32_t version = in.u32();
  if (version != kWeightsVersion) throw std::runtime_error("weights: unsupported version " + std::to_string(version));

  const std::string descriptor = in.str();
  PolicyModel model = PolicyModel::zeros(Architecture::parse(descriptor));
  model.meta = parse_meta(descriptor);

  std::size_t index = 0;
  while (!in.done()) {
    if (index >= model.params.size()) throw std::runtime_error("weights: more tensors than the architecture has");
    Tensor& t = model.params[index++];
    const std::string name = in.str();
    if (name != t.name) throw std::runtime_error("weights: expected tensor " + t.name + ", found " + name);
    const std::uint32_t rank = in.u32();
    std::vector<std::size_t> shape(rank);
    for (auto& d : shape) d = in.u32();
    if (shape != t.shape) throw std::runtime_error("weights: shape mismatch for " + name);
    for (double& v : t.values) v = static_cast<double>(in.f32());
  }
  if (index != model.params.size()) throw std::runtime_error("weights: missing tensors");
  model.validate();
  return model;
}

void save_weights(const std::filesystem::path& path, const PolicyModel& model) {
  const auto bytes = encode_weights(model);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_weights: cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("save_weights: write failed for " + path.string());
}

PolicyModel load_weights(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_weights: cannot open " + path.string());
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_weights(bytes);
}

}  // namespace hvs

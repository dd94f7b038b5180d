// Checkpoint layout:
//   magic   "S2SRL1\n"
//   u32     metadata length, then that many bytes of "key=value\n" lines
//           (version, direction, stage, vocab, embed, hidden, attention, vocab_hash)
//   per block, in Block order:
//     u32 name length, name bytes, u32 rows, u32 cols, rows*cols f64
// All integers and floats are little-endian.

#include <bit>
#include <fstream>
#include <map>
#include <sstream>

#include "s2srl/seq2seq_model.hpp"

namespace s2srl {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

class Reader {
 public:
  explicit Reader(std::string bytes) : bytes_(std::move(bytes)) {}

  std::string_view take(std::size_t n) {
    if (pos_ + n > bytes_.size()) throw TruncatedCheckpointError("checkpoint truncated");
    std::string_view v(bytes_.data() + pos_, n);
    pos_ += n;
    return v;
  }
  std::uint32_t u32() {
    const auto b = take(4);
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  std::uint64_t u64() {
    const auto b = take(8);
    std::uint64_t v = 0;
    for (int i = 7; i >= 0; --i) v = (v << 8) | static_cast<unsigned char>(b[static_cast<std::size_t>(i)]);
    return v;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  std::string bytes_;
  std::size_t pos_ = 0;
};

std::size_t parse_size(const std::map<std::string, std::string>& meta, const std::string& key) {
  auto it = meta.find(key);
  if (it == meta.end()) throw CheckpointFormatError("checkpoint metadata missing '" + key + "'");
  try {
    return static_cast<std::size_t>(std::stoull(it->second));
  } catch (const std::exception&) {
    throw CheckpointFormatError("checkpoint metadata '" + key + "' is not a number");
  }
}

}  // namespace

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto& d = ckpt.params.dims();
  std::ostringstream meta;
  meta << "version=" << kCheckpointVersion << '\n'
       << "direction=" << ckpt.direction << '\n'
       << "stage=" << ckpt.stage << '\n'
       << "vocab=" << d.vocab << '\n'
       << "embed=" << d.embed << '\n'
       << "hidden=" << d.hidden << '\n'
       << "attention=" << (d.attention ? 1 : 0) << '\n'
       << "vocab_hash=" << std::hex << ckpt.vocab_hash << '\n';
  std::string out(kCheckpointMagic);
  const std::string m = meta.str();
  put_u32(out, static_cast<std::uint32_t>(m.size()));
  out += m;
  for (std::size_t b = 0; b < static_cast<std::size_t>(Block::kCount); ++b) {
    const auto& info = ckpt.params.blocks()[b];
    const std::string name = info.name;
    put_u32(out, static_cast<std::uint32_t>(name.size()));
    out += name;
    put_u32(out, static_cast<std::uint32_t>(info.rows));
    put_u32(out, static_cast<std::uint32_t>(info.cols));
    for (double v : ckpt.params.block(static_cast<Block>(b))) put_u64(out, std::bit_cast<std::uint64_t>(v));
  }
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw CheckpointError("cannot write checkpoint " + path.string());
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw CheckpointError("write failed for checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw CheckpointError("cannot read checkpoint " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  if (bytes.size() < kCheckpointMagic.size()) {
    if (std::string_view(bytes) == kCheckpointMagic.substr(0, bytes.size()) && !bytes.empty()) {
      throw TruncatedCheckpointError("checkpoint truncated inside magic: " + path.string());
    }
    throw CheckpointFormatError("not a checkpoint (bad magic): " + path.string());
  }
  if (std::string_view(bytes).substr(0, kCheckpointMagic.size()) != kCheckpointMagic) {
    throw CheckpointFormatError("not a checkpoint (bad magic): " + path.string());
  }
  Reader r(bytes.substr(kCheckpointMagic.size()));
  const std::uint32_t meta_len = r.u32();
  std::map<std::string, std::string> meta;
  {
    std::istringstream ms{std::string(r.take(meta_len))};
    std::string line;
    while (std::getline(ms, line)) {
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) throw CheckpointFormatError("malformed metadata line: " + line);
      meta[line.substr(0, eq)] = line.substr(eq + 1);
    }
  }
  const std::size_t version = parse_size(meta, "version");
  if (version != static_cast<std::size_t>(kCheckpointVersion)) {
    throw UnsupportedVersionError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.direction = meta.count("direction") ? meta["direction"] : "";
  if (ckpt.direction != "forward" && ckpt.direction != "backward") {
    throw CheckpointFormatError("checkpoint direction must be forward or backward");
  }
  ckpt.stage = meta.count("stage") ? meta["stage"] : "";
  if (!meta.count("vocab_hash")) throw CheckpointFormatError("checkpoint metadata missing 'vocab_hash'");
  try {
    ckpt.vocab_hash = std::stoull(meta["vocab_hash"], nullptr, 16);
  } catch (const std::exception&) {
    throw CheckpointFormatError("checkpoint vocab_hash is not hex");
  }
  ModelDims dims;
  dims.vocab = parse_size(meta, "vocab");
  dims.embed = parse_size(meta, "embed");
  dims.hidden = parse_size(meta, "hidden");
  dims.attention = parse_size(meta, "attention") != 0;
  try {
    ckpt.params = ModelParams(dims);
  } catch (const ConfigError& e) {
    throw CheckpointFormatError(std::string("bad checkpoint dims: ") + e.what());
  }
  for (std::size_t b = 0; b < static_cast<std::size_t>(Block::kCount); ++b) {
    const auto& info = ckpt.params.blocks()[b];
    const std::uint32_t name_len = r.u32();
    const std::string name(r.take(name_len));
    if (name != info.name) throw CheckpointFormatError("expected array '" + std::string(info.name) + "', found '" + name + "'");
    const std::uint32_t rows = r.u32(), cols = r.u32();
    if (rows != info.rows || cols != info.cols) {
      throw CheckpointFormatError("array '" + name + "' has unexpected shape");
    }
    for (double& v : ckpt.params.block(static_cast<Block>(b))) v = std::bit_cast<double>(r.u64());
  }
  if (!r.at_end()) throw CheckpointFormatError("trailing bytes after last array");
  if (!ckpt.params.all_finite()) throw CheckpointFormatError("checkpoint contains non-finite values");
  return ckpt;
}

}  // namespace s2srl

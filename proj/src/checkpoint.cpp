#include "agcnn/checkpoint.hpp"

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <fstream>

#include "agcnn/error.hpp"

#include "json.hpp"

namespace agcnn {

namespace {

constexpr char kMagic[4] = {'A', 'G', 'C', 'N'};

void write_u32(std::ostream& out, uint32_t v) {
  unsigned char b[4];
  for (int i = 0; i < 4; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 4);
}

void write_u64(std::ostream& out, uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

uint32_t read_u32(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  if (!in) throw Error(ErrorKind::data, "checkpoint truncated in header");
  uint32_t v = 0;
  for (int i = 0; i < 4; ++i) v |= static_cast<uint32_t>(b[i]) << (8 * i);
  return v;
}

uint64_t read_u64(std::istream& in) {
  unsigned char b[8];
  in.read(reinterpret_cast<char*>(b), 8);
  if (!in) throw Error(ErrorKind::data, "checkpoint truncated in header");
  uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<uint64_t>(b[i]) << (8 * i);
  return v;
}

void write_f32_le(std::ostream& out, float f) {
  uint32_t bits;
  std::memcpy(&bits, &f, 4);
  write_u32(out, bits);
}

}  // namespace

void save_checkpoint(const AgcnnModel& model, const std::string& path) {
  const auto params = model.named_params();

  nlohmann::json manifest = nlohmann::json::array();
  uint64_t offset = 0;
  for (const auto& np : params) {
    manifest.push_back({{"name", np.name},
                        {"shape", np.tensor->shape},
                        {"offset", offset},
                        {"count", np.tensor->size()}});
    offset += np.tensor->size() * 4;
  }
  nlohmann::json meta = {
      {"hyperparams", hyperparams_to_json(model.hp)},
      {"vocab_size", model.vocab_size},
      {"vocab_hash", model.vocab_hash},
      {"tensors", manifest},
  };
  const std::string meta_str = meta.dump();

  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out)
      throw Error(ErrorKind::io, "cannot write checkpoint: " + tmp);
    out.write(kMagic, 4);
    write_u32(out, kCheckpointVersion);
    write_u64(out, meta_str.size());
    out.write(meta_str.data(), static_cast<std::streamsize>(meta_str.size()));
    for (const auto& np : params)
      for (double v : np.tensor->data)
        write_f32_le(out, static_cast<float>(v));
    if (!out)
      throw Error(ErrorKind::io, "write failed for checkpoint: " + tmp);
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error(ErrorKind::io, "cannot rename checkpoint into place: " + path);
  }
}

CheckpointLoad load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::io, "cannot open checkpoint: " + path);

  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0)
    throw Error(ErrorKind::data, "bad checkpoint magic in " + path);
  const uint32_t version = read_u32(in);
  if (version != kCheckpointVersion)
    throw Error(ErrorKind::data,
                "unsupported checkpoint version " + std::to_string(version));
  const uint64_t meta_len = read_u64(in);
  std::string meta_str(meta_len, '\0');
  in.read(meta_str.data(), static_cast<std::streamsize>(meta_len));
  if (!in)
    throw Error(ErrorKind::data, "checkpoint truncated in metadata");

  nlohmann::json meta;
  HyperParams hp;
  size_t vocab_size = 0;
  uint64_t vocab_hash = 0;
  try {
    meta = nlohmann::json::parse(meta_str);
    hp = hyperparams_from_json(meta.at("hyperparams"));
    vocab_size = meta.at("vocab_size");
    vocab_hash = meta.at("vocab_hash");
  } catch (const Error&) {
    throw;
  } catch (const std::exception& e) {
    throw Error(ErrorKind::data,
                std::string("bad checkpoint metadata: ") + e.what());
  }

  CheckpointLoad result;
  result.model = init_params(hp, vocab_size, hp.seed);
  result.model.vocab_hash = vocab_hash;
  result.vocab_hash = vocab_hash;

  auto params = result.model.named_params();
  const auto& manifest = meta.at("tensors");
  if (manifest.size() != params.size())
    throw Error(ErrorKind::data,
                "checkpoint manifest lists " + std::to_string(manifest.size()) +
                    " tensors, model expects " + std::to_string(params.size()));
  size_t total_floats = 0;
  for (size_t i = 0; i < params.size(); ++i) {
    const auto& entry = manifest.at(i);
    const std::string name = entry.at("name");
    const auto shape = entry.at("shape").get<std::vector<size_t>>();
    if (name != params[i].name || shape != params[i].tensor->shape)
      throw Error(ErrorKind::data,
                  "checkpoint manifest mismatch at tensor '" + name +
                      "': expected '" + params[i].name + "'");
    total_floats += params[i].tensor->size();
  }

  std::vector<unsigned char> payload(total_floats * 4);
  in.read(reinterpret_cast<char*>(payload.data()),
          static_cast<std::streamsize>(payload.size()));
  if (static_cast<size_t>(in.gcount()) != payload.size())
    throw Error(ErrorKind::data, "checkpoint truncated in payload");

  size_t pos = 0;
  for (auto& np : params) {
    for (size_t j = 0; j < np.tensor->size(); ++j, pos += 4) {
      uint32_t bits = 0;
      for (int b = 0; b < 4; ++b)
        bits |= static_cast<uint32_t>(payload[pos + b]) << (8 * b);
      float f;
      std::memcpy(&f, &bits, 4);
      np.tensor->data[j] = static_cast<double>(f);
    }
  }
  return result;
}

}  // namespace agcnn

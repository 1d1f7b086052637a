#include "wsbert/checkpoint_io.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>

#include "wsbert/error.hpp"

namespace wsbert {

namespace {

constexpr char kMagic[8] = {'W', 'S', 'B', 'T', 'C', 'K', 'P', '1'};

}  // namespace

void WriteTensorFile(const std::filesystem::path& path,
                     const nlohmann::json& meta,
                     const std::vector<const Parameter*>& params) {
  nlohmann::json header;
  header["meta"] = meta;
  header["tensors"] = nlohmann::json::array();
  for (const auto* p : params) {
    header["tensors"].push_back(
        {{"name", p->name}, {"rows", p->value.rows()}, {"cols", p->value.cols()}});
  }
  std::string text = header.dump();

  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path.string());
  out.write(kMagic, sizeof kMagic);
  std::uint64_t length = text.size();
  out.write(reinterpret_cast<const char*>(&length), sizeof length);
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  for (const auto* p : params) {
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(double)));
  }
  if (!out) throw Error(ErrorCode::kIo, "short write to " + path.string());
}

TensorFile ReadTensorFile(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kMissingFile, "cannot open " + path.string());
  char magic[sizeof kMagic];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw Error(ErrorCode::kSchemaMismatch,
                path.string() + " is not a checkpoint file");
  }
  std::uint64_t length = 0;
  in.read(reinterpret_cast<char*>(&length), sizeof length);
  std::string text(length, '\0');
  in.read(text.data(), static_cast<std::streamsize>(length));
  if (!in) throw Error(ErrorCode::kSchemaMismatch, "truncated checkpoint header");

  TensorFile file;
  nlohmann::json header = nlohmann::json::parse(text);
  file.meta = header.at("meta");
  for (const auto& t : header.at("tensors")) {
    Matrix m(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(m.size() * sizeof(double)));
    if (!in) throw Error(ErrorCode::kSchemaMismatch, "truncated checkpoint data");
    file.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }
  return file;
}

void AssignTensors(const TensorFile& file,
                   const std::vector<Parameter*>& params) {
  for (auto* p : params) {
    auto it = file.tensors.find(p->name);
    if (it == file.tensors.end()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "checkpoint has no tensor '" + p->name + "'");
    }
    if (it->second.rows() != p->value.rows() ||
        it->second.cols() != p->value.cols()) {
      throw Error(ErrorCode::kShapeMismatch,
                  "tensor '" + p->name + "' has the wrong shape");
    }
    p->value = it->second;
  }
}

}  // namespace wsbert

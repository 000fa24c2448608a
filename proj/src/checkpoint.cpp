#include "teamrl/checkpoint.hpp"

#include <bit>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

namespace teamrl {

std::string obs_layout_version(const std::string& env_kind_name) {
  return env_kind_name + "_obs_v1";
}

namespace {

void write_header(std::ostream& os, const CheckpointMeta& meta) {
  os << kCheckpointMagic << "\n";
  os << "variant " << meta.variant << "\n";
  os << "env " << meta.env << "\n";
  os << "obs_layout " << meta.obs_layout << "\n";
  os << "n_train " << meta.n_train << "\n";
  os << "base_obs_dim " << meta.base_obs_dim << "\n";
  os << "cap_dim " << meta.cap_dim << "\n";
}

CheckpointMeta read_header(std::istream& is, const std::string& path) {
  std::string line;
  if (!std::getline(is, line) || line != kCheckpointMagic)
    throw CheckpointError(strfmt("%s: not a checkpoint file", path.c_str()));
  CheckpointMeta meta;
  for (int i = 0; i < 6; ++i) {
    if (!std::getline(is, line))
      throw CheckpointError(strfmt("%s: truncated header", path.c_str()));
    std::istringstream ls(line);
    std::string key, value;
    ls >> key >> value;
    if (key == "variant") meta.variant = value;
    else if (key == "env") meta.env = value;
    else if (key == "obs_layout") meta.obs_layout = value;
    else if (key == "n_train") meta.n_train = std::stoi(value);
    else if (key == "base_obs_dim") meta.base_obs_dim = std::stoi(value);
    else if (key == "cap_dim") meta.cap_dim = std::stoi(value);
    else throw CheckpointError(strfmt("%s: unexpected header key '%s'", path.c_str(), key.c_str()));
  }
  return meta;
}

}  // namespace

void save_checkpoint(const std::string& path, const CheckpointMeta& meta,
                     const std::vector<const ParamStore<float>*>& stores) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream os(tmp, std::ios::binary);
    if (!os) throw CheckpointError(strfmt("cannot write '%s'", tmp.c_str()));
    write_header(os, meta);
    for (const ParamStore<float>* store : stores)
      for (int i = 0; i < store->size(); ++i) {
        const Mat<float>& v = store->value(i);
        os << "param " << store->name(i) << " " << v.rows() << " " << v.cols();
        for (Eigen::Index k = 0; k < v.size(); ++k)
          os << " " << strfmt("%08x", std::bit_cast<uint32_t>(v.data()[k]));
        os << "\n";
      }
    os << "end\n";
    if (!os) throw CheckpointError(strfmt("write failed for '%s'", tmp.c_str()));
  }
  std::filesystem::rename(tmp, path);
}

CheckpointMeta peek_checkpoint_meta(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(strfmt("cannot open checkpoint '%s'", path.c_str()));
  return read_header(is, path);
}

CheckpointMeta load_checkpoint(const std::string& path,
                               const std::vector<ParamStore<float>*>& stores) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError(strfmt("cannot open checkpoint '%s'", path.c_str()));
  const CheckpointMeta meta = read_header(is, path);

  std::map<std::string, Mat<float>> file_params;
  std::string line;
  bool saw_end = false;
  while (std::getline(is, line)) {
    if (line == "end") {
      saw_end = true;
      break;
    }
    std::istringstream ls(line);
    std::string tag, name;
    Eigen::Index rows = 0, cols = 0;
    ls >> tag >> name >> rows >> cols;
    if (tag != "param" || rows <= 0 || cols <= 0)
      throw CheckpointError(strfmt("%s: malformed parameter line", path.c_str()));
    Mat<float> v(rows, cols);
    std::string hex;
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (!(ls >> hex) || hex.size() != 8)
        throw CheckpointError(
            strfmt("%s: parameter '%s' has malformed values", path.c_str(), name.c_str()));
      v.data()[k] = std::bit_cast<float>(static_cast<uint32_t>(std::stoul(hex, nullptr, 16)));
    }
    if (!file_params.emplace(name, std::move(v)).second)
      throw CheckpointError(strfmt("%s: duplicate parameter '%s'", path.c_str(), name.c_str()));
  }
  if (!saw_end) throw CheckpointError(strfmt("%s: missing end marker", path.c_str()));

  size_t used = 0;
  for (ParamStore<float>* store : stores)
    for (int i = 0; i < store->size(); ++i) {
      const auto it = file_params.find(store->name(i));
      if (it == file_params.end())
        throw CheckpointError(
            strfmt("%s: missing parameter '%s'", path.c_str(), store->name(i).c_str()));
      Mat<float>& dst = store->value(i);
      if (it->second.rows() != dst.rows() || it->second.cols() != dst.cols())
        throw CheckpointError(strfmt("%s: parameter '%s' has shape %ldx%ld, expected %ldx%ld",
                                     path.c_str(), store->name(i).c_str(),
                                     static_cast<long>(it->second.rows()),
                                     static_cast<long>(it->second.cols()),
                                     static_cast<long>(dst.rows()),
                                     static_cast<long>(dst.cols())));
      dst = it->second;
      ++used;
    }
  if (used != file_params.size())
    throw CheckpointError(strfmt("%s: file carries %zu parameters but the networks expect %zu",
                                 path.c_str(), file_params.size(), used));
  return meta;
}

}  // namespace teamrl

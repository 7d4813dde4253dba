// Copyright (c) 2026 the zdda authors
// SPDX-License-Identifier: Apache-2.0
#include "zdda/net/checkpoint.hpp"

#include <cstring>
#include <fstream>
#include <json.hpp>

namespace zdda {
namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'Z', 'D', 'D', 'A', 'C', 'K', 'P', '1'};

template <class S>
const char* dtype_name() {
  return sizeof(S) == 4 ? "f32" : "f64";
}

template <class S>
void write_archive(const std::filesystem::path& path, const json& meta,
                   const ParamSet<S>& params) {
  json header = meta;
  header["dtype"] = dtype_name<S>();
  json arrays = json::array();
  for (const auto& [name, m] : params)
    arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()}});
  header["arrays"] = arrays;
  const std::string hs = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot create " + path.string());
  out.write(kMagic, sizeof(kMagic));
  const std::uint64_t hlen = hs.size();
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
  for (const auto& [name, m] : params)
    out.write(reinterpret_cast<const char*>(m.data()),
              static_cast<std::streamsize>(sizeof(S) * m.size()));
  if (!out) throw FormatError("short write to " + path.string());
}

template <class S>
json read_archive(const std::filesystem::path& path, ParamSet<S>& params) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + ": not a parameter archive");
  std::uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  std::string hs(hlen, '\0');
  in.read(hs.data(), static_cast<std::streamsize>(hlen));
  json header;
  try {
    header = json::parse(hs);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": bad archive header: " + e.what());
  }
  if (header.at("dtype").get<std::string>() != dtype_name<S>())
    throw FormatError(path.string() + ": archive dtype is " +
                      header.at("dtype").get<std::string>());
  for (const auto& a : header.at("arrays")) {
    auto& m = params.add(a.at("name").get<std::string>(),
                         a.at("rows").get<Eigen::Index>(),
                         a.at("cols").get<Eigen::Index>());
    in.read(reinterpret_cast<char*>(m.data()),
            static_cast<std::streamsize>(sizeof(S) * m.size()));
  }
  if (!in) throw FormatError(path.string() + ": truncated archive payload");
  return header;
}

json spec_to_json(const SplitNetworkSpec& s) {
  return json{{"backbone_id", s.backbone_id},
              {"split_layer", s.split_layer},
              {"feature_dim", s.feature_dim},
              {"input_channels", s.input_channels}};
}

SplitNetworkSpec spec_from_json(const json& j) {
  SplitNetworkSpec s;
  s.backbone_id = j.at("backbone_id").get<std::string>();
  s.split_layer = j.at("split_layer").get<std::string>();
  s.feature_dim = j.at("feature_dim").get<int>();
  s.input_channels = j.at("input_channels").get<int>();
  return s;
}

}  // namespace

template <class S>
void save_branch(const std::filesystem::path& path, const BranchState<S>& b,
                 const std::string& seed_lineage) {
  json meta{{"kind", "branch"},
            {"spec", spec_to_json(b.spec)},
            {"tag", to_string(b.tag)},
            {"frozen", b.frozen},
            {"seed_lineage", seed_lineage}};
  write_archive(path, meta, b.params);
}

template <class S>
BranchState<S> load_branch(const std::filesystem::path& path,
                           std::string* seed_lineage) {
  BranchState<S> b;
  const json header = read_archive(path, b.params);
  if (header.at("kind").get<std::string>() != "branch")
    throw FormatError(path.string() + ": not a branch archive");
  b.spec = spec_from_json(header.at("spec"));
  b.tag = branch_tag_from_string(header.at("tag").get<std::string>());
  b.frozen = header.at("frozen").get<bool>();
  if (seed_lineage) *seed_lineage = header.value("seed_lineage", "");
  return b;
}

template <class S>
void save_classifier(const std::filesystem::path& path,
                     const ClassifierState<S>& c,
                     const std::string& seed_lineage) {
  json meta{{"kind", "classifier"},
            {"classifier_kind",
             c.kind == ClassifierKind::source ? "source" : "joint"},
            {"class_count", c.class_count},
            {"input_dim", c.input_dim},
            {"input_relu", c.input_relu},
            {"seed_lineage", seed_lineage}};
  write_archive(path, meta, c.params);
}

template <class S>
ClassifierState<S> load_classifier(const std::filesystem::path& path,
                                   std::string* seed_lineage) {
  ClassifierState<S> c;
  const json header = read_archive(path, c.params);
  if (header.at("kind").get<std::string>() != "classifier")
    throw FormatError(path.string() + ": not a classifier archive");
  const auto kind = header.at("classifier_kind").get<std::string>();
  c.kind = kind == "source" ? ClassifierKind::source : ClassifierKind::joint;
  c.class_count = header.at("class_count").get<int>();
  c.input_dim = header.at("input_dim").get<int>();
  c.input_relu = header.at("input_relu").get<bool>();
  if (seed_lineage) *seed_lineage = header.value("seed_lineage", "");
  return c;
}

template void save_branch<float>(const std::filesystem::path&,
                                 const BranchState<float>&,
                                 const std::string&);
template void save_branch<double>(const std::filesystem::path&,
                                  const BranchState<double>&,
                                  const std::string&);
template BranchState<float> load_branch<float>(const std::filesystem::path&,
                                               std::string*);
template BranchState<double> load_branch<double>(const std::filesystem::path&,
                                                 std::string*);
template void save_classifier<float>(const std::filesystem::path&,
                                     const ClassifierState<float>&,
                                     const std::string&);
template void save_classifier<double>(const std::filesystem::path&,
                                      const ClassifierState<double>&,
                                      const std::string&);
template ClassifierState<float> load_classifier<float>(
    const std::filesystem::path&, std::string*);
template ClassifierState<double> load_classifier<double>(
    const std::filesystem::path&, std::string*);

}  // namespace zdda

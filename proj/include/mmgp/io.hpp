#pragma once

#include "mmgp/mesh.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace mmgp {

namespace fs = std::filesystem;

inline constexpr int kSchemaVersion = 1;

/// Field columns stored per node.
enum FieldColumn { Ux = 0, Uy = 1, Pressure = 2, NuT = 3 };
inline constexpr int kFieldCount = 4;
const std::vector<std::string>& field_names();  // u_x u_y p_rho nu_t

struct SampleInfo {
  std::string id;
  std::string split;
  std::uint64_t seed = 0;
  double eps = 0.0;
  double eta = 0.0;
  double alpha = 0.0;  // radians
  double reynolds = 0.0;
  double speed = 0.0;
  double chord = 0.0;
  double mu_re = 0.0;
  double mu_im = 0.0;
  double radius = 0.0;
  double map_c = 0.0;
  double offset_x = 0.0;
  double offset_y = 0.0;
  double cl = 0.0;
  double cd = 0.0;
  double reference_time_s = 0.0;

  nlohmann::json to_json() const;
  static SampleInfo from_json(const nlohmann::json& j);
};

struct Sample {
  SampleInfo info;
  TriMesh mesh;
  Eigen::MatrixXd fields;  // nodes x kFieldCount
};

std::string format_double(double v);

void write_mesh_csv(const fs::path& dir, const TriMesh& mesh);
TriMesh read_mesh_csv(const fs::path& dir);
void write_fields_csv(const fs::path& file, const Eigen::MatrixXd& fields);
Eigen::MatrixXd read_fields_csv(const fs::path& file, int columns);

void write_sample(const fs::path& dir, const Sample& s);
Sample read_sample(const fs::path& dir);
/// Samples of one split, in directory-name order. Missing split gives an empty list.
std::vector<Sample> read_split(const fs::path& root, const std::string& split);

void write_text(const fs::path& file, const std::string& text);
std::string read_text(const fs::path& file);
void write_json(const fs::path& file, const nlohmann::json& j);
nlohmann::json read_json(const fs::path& file);

/// Raw little-endian doubles in column-major order.
void write_array(const fs::path& file, const Eigen::MatrixXd& a);
Eigen::MatrixXd read_array(const fs::path& file, Eigen::Index rows, Eigen::Index cols);

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h = 0xcbf29ce484222325ULL);
/// Hash of every regular file below `root` (relative path and contents), in sorted order.
std::uint64_t hash_tree(const fs::path& root);
std::string hex64(std::uint64_t v);

/// Flat `key = value` configuration. `[section]` headers prefix later keys with
/// `section.`; `#` starts a comment.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(const std::string& text);
  static KeyValueConfig load(const fs::path& file);

  bool has(const std::string& key) const { return values_.count(key) > 0; }
  void set(const std::string& key, const std::string& value) { values_[key] = value; }
  std::string get_str(const std::string& key, const std::string& fallback) const;
  double get(const std::string& key, double fallback) const;
  int get(const std::string& key, int fallback) const;
  bool get(const std::string& key, bool fallback) const;
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const;
  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace mmgp

#include "mmgp/io.hpp"

#include <algorithm>
#include <bit>
#include <cctype>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mmgp {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const fs::path& where) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw Error(Errc::Format, "bad number '" + s + "' in " + where.string());
  return v;
}

long parse_long(const std::string& s, const fs::path& where) {
  char* end = nullptr;
  const long v = std::strtol(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') throw Error(Errc::Format, "bad integer '" + s + "' in " + where.string());
  return v;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& file, std::size_t columns) {
  std::ifstream in(file);
  if (!in) throw Error(Errc::Io, "cannot open " + file.string());
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::Format, "missing header in " + file.string());
  std::vector<std::vector<std::string>> rows;
  while (std::getline(in, line)) {
    if (line.empty() || line == "\r") continue;
    auto cells = split_csv_line(line);
    if (cells.size() != columns) throw Error(Errc::Format, "wrong column count in " + file.string());
    rows.push_back(std::move(cells));
  }
  return rows;
}

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

}  // namespace

const std::vector<std::string>& field_names() {
  static const std::vector<std::string> names{"u_x", "u_y", "p_rho", "nu_t"};
  return names;
}

nlohmann::json SampleInfo::to_json() const {
  return nlohmann::json{
      {"schema_version", kSchemaVersion},
      {"id", id},
      {"split", split},
      {"seed", seed},
      {"case",
       {{"eps", eps},
        {"eta", eta},
        {"mu_re", mu_re},
        {"mu_im", mu_im},
        {"radius", radius},
        {"map_c", map_c},
        {"offset_x", offset_x},
        {"offset_y", offset_y},
        {"chord", chord}}},
      {"alpha_rad", alpha},
      {"reynolds", reynolds},
      {"inlet_speed", speed},
      {"C_L", cl},
      {"C_D", cd},
      {"reference_time_s", reference_time_s},
  };
}

SampleInfo SampleInfo::from_json(const nlohmann::json& j) {
  try {
    if (j.at("schema_version").get<int>() != kSchemaVersion)
      throw Error(Errc::Format, "unsupported manifest schema version");
    SampleInfo s;
    s.id = j.at("id").get<std::string>();
    s.split = j.at("split").get<std::string>();
    s.seed = j.at("seed").get<std::uint64_t>();
    const auto& c = j.at("case");
    s.eps = c.at("eps").get<double>();
    s.eta = c.at("eta").get<double>();
    s.mu_re = c.at("mu_re").get<double>();
    s.mu_im = c.at("mu_im").get<double>();
    s.radius = c.at("radius").get<double>();
    s.map_c = c.at("map_c").get<double>();
    s.offset_x = c.at("offset_x").get<double>();
    s.offset_y = c.at("offset_y").get<double>();
    s.chord = c.at("chord").get<double>();
    s.alpha = j.at("alpha_rad").get<double>();
    s.reynolds = j.at("reynolds").get<double>();
    s.speed = j.at("inlet_speed").get<double>();
    s.cl = j.at("C_L").get<double>();
    s.cd = j.at("C_D").get<double>();
    s.reference_time_s = j.at("reference_time_s").get<double>();
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::Format, std::string("malformed manifest: ") + e.what());
  }
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_mesh_csv(const fs::path& dir, const TriMesh& mesh) {
  std::string pts = "x,y,surface\n";
  for (std::size_t i = 0; i < mesh.nodes.size(); ++i) {
    pts += format_double(mesh.nodes[i].x()) + "," + format_double(mesh.nodes[i].y()) + "," +
           (mesh.surface_mask[i] ? "1" : "0") + "\n";
  }
  write_text(dir / "points.csv", pts);
  std::string tris = "i,j,k\n";
  for (const auto& t : mesh.triangles)
    tris += std::to_string(t[0]) + "," + std::to_string(t[1]) + "," + std::to_string(t[2]) + "\n";
  write_text(dir / "triangles.csv", tris);
}

TriMesh read_mesh_csv(const fs::path& dir) {
  TriMesh mesh;
  const fs::path pf = dir / "points.csv";
  for (const auto& row : read_csv(pf, 3)) {
    mesh.nodes.emplace_back(parse_double(row[0], pf), parse_double(row[1], pf));
    mesh.surface_mask.push_back(parse_long(row[2], pf) != 0);
  }
  const fs::path tf = dir / "triangles.csv";
  for (const auto& row : read_csv(tf, 3)) {
    mesh.triangles.push_back({static_cast<int>(parse_long(row[0], tf)), static_cast<int>(parse_long(row[1], tf)),
                              static_cast<int>(parse_long(row[2], tf))});
  }
  return mesh;
}

void write_fields_csv(const fs::path& file, const Eigen::MatrixXd& fields) {
  std::string out;
  for (int c = 0; c < fields.cols(); ++c) {
    if (c) out += ",";
    out += c < kFieldCount ? field_names()[c] : "f" + std::to_string(c);
  }
  out += "\n";
  for (Eigen::Index r = 0; r < fields.rows(); ++r) {
    for (Eigen::Index c = 0; c < fields.cols(); ++c) {
      if (c) out += ",";
      out += format_double(fields(r, c));
    }
    out += "\n";
  }
  write_text(file, out);
}

Eigen::MatrixXd read_fields_csv(const fs::path& file, int columns) {
  const auto rows = read_csv(file, columns);
  Eigen::MatrixXd f(rows.size(), columns);
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (int c = 0; c < columns; ++c) f(r, c) = parse_double(rows[r][c], file);
  return f;
}

void write_sample(const fs::path& dir, const Sample& s) {
  fs::create_directories(dir);
  write_json(dir / "manifest.json", s.info.to_json());
  write_mesh_csv(dir, s.mesh);
  write_fields_csv(dir / "fields.csv", s.fields);
}

Sample read_sample(const fs::path& dir) {
  Sample s;
  s.info = SampleInfo::from_json(read_json(dir / "manifest.json"));
  s.mesh = read_mesh_csv(dir);
  s.fields = read_fields_csv(dir / "fields.csv", kFieldCount);
  if (s.fields.rows() != static_cast<Eigen::Index>(s.mesh.nodes.size()))
    throw Error(Errc::Format, "field rows do not match node count in " + dir.string());
  return s;
}

std::vector<Sample> read_split(const fs::path& root, const std::string& split) {
  const fs::path dir = root / split;
  std::vector<Sample> out;
  if (!fs::is_directory(dir)) return out;
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) out.push_back(read_sample(d));
  return out;
}

void write_text(const fs::path& file, const std::string& text) {
  if (file.has_parent_path()) fs::create_directories(file.parent_path());
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(Errc::Io, "cannot write " + file.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(Errc::Io, "write failed for " + file.string());
}

std::string read_text(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw Error(Errc::Io, "cannot open " + file.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const fs::path& file, const nlohmann::json& j) { write_text(file, j.dump(2) + "\n"); }

nlohmann::json read_json(const fs::path& file) {
  try {
    return nlohmann::json::parse(read_text(file));
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(Errc::Format, file.string() + ": " + e.what());
  }
}

void write_array(const fs::path& file, const Eigen::MatrixXd& a) {
  std::string bytes(static_cast<std::size_t>(a.size()) * sizeof(double), '\0');
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    std::uint64_t bits = std::bit_cast<std::uint64_t>(a.data()[i]);
    for (int b = 0; b < 8; ++b) bytes[i * 8 + b] = static_cast<char>((bits >> (8 * b)) & 0xff);
  }
  write_text(file, bytes);
}

Eigen::MatrixXd read_array(const fs::path& file, Eigen::Index rows, Eigen::Index cols) {
  const std::string bytes = read_text(file);
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * sizeof(double))
    throw Error(Errc::Format, "array size mismatch in " + file.string());
  Eigen::MatrixXd a(rows, cols);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    std::uint64_t bits = 0;
    for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[i * 8 + b])) << (8 * b);
    a.data()[i] = std::bit_cast<double>(bits);
  }
  return a;
}

std::uint64_t fnv1a(const std::string& bytes, std::uint64_t h) {
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t hash_tree(const fs::path& root) {
  std::vector<fs::path> files;
  for (const auto& e : fs::recursive_directory_iterator(root))
    if (e.is_regular_file()) files.push_back(e.path());
  std::sort(files.begin(), files.end());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (const auto& f : files) {
    h = fnv1a(fs::relative(f, root).generic_string(), h);
    h = fnv1a(std::string(1, '\0'), h);
    h = fnv1a(read_text(f), h);
  }
  return h;
}

std::string hex64(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

KeyValueConfig KeyValueConfig::parse(const std::string& text) {
  KeyValueConfig cfg;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw Error(Errc::Format, "bad section header on line " + std::to_string(lineno));
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(Errc::Format, "expected key = value on line " + std::to_string(lineno));
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw Error(Errc::Format, "empty key on line " + std::to_string(lineno));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    cfg.values_[section.empty() ? key : section + "." + key] = value;
  }
  return cfg;
}

KeyValueConfig KeyValueConfig::load(const fs::path& file) { return parse(read_text(file)); }

std::string KeyValueConfig::get_str(const std::string& key, const std::string& fallback) const {
  auto it = values_.find(key);
  return it == values_.end() ? fallback : it->second;
}

double KeyValueConfig::get(const std::string& key, double fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return parse_double(it->second, "config key " + key);
}

int KeyValueConfig::get(const std::string& key, int fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  return static_cast<int>(parse_long(it->second, "config key " + key));
}

bool KeyValueConfig::get(const std::string& key, bool fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  const std::string& v = it->second;
  if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
  if (v == "false" || v == "0" || v == "no" || v == "off") return false;
  throw Error(Errc::Format, "config key " + key + " is not a boolean");
}

std::uint64_t KeyValueConfig::get_u64(const std::string& key, std::uint64_t fallback) const {
  auto it = values_.find(key);
  if (it == values_.end()) return fallback;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(it->second.c_str(), &end, 10);
  if (end == it->second.c_str() || *end != '\0') throw Error(Errc::Format, "config key " + key + " is not an integer");
  return v;
}

}  // namespace mmgp

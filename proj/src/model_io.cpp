#include "koopman/model_io.hpp"

#include <fstream>
#include <sstream>

#include "koopman/csv.hpp"
#include "koopman/errors.hpp"

namespace koopman {

namespace {

void write_vector(std::ostream& os, const Vector& v) {
  for (Eigen::Index i = 0; i < v.size(); ++i)
    os << (i ? " " : "") << format_double(v[i]);
  os << "\n";
}

void write_matrix(std::ostream& os, const Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c)
      os << (c ? " " : "") << format_double(m(r, c));
    os << "\n";
  }
}

class Reader {
 public:
  explicit Reader(std::istream& is) : is_(is) {}

  std::string line() {
    std::string l;
    if (!std::getline(is_, l)) throw usage_error("model file: truncated");
    return l;
  }

  void expect(const std::string& want) {
    const std::string got = line();
    if (got != want)
      throw usage_error("model file: expected '" + want + "', got '" + got +
                        "'");
  }

  std::string field(const std::string& key) {
    const std::string l = line();
    if (l.rfind(key + " ", 0) != 0)
      throw usage_error("model file: expected field '" + key + "' in '" + l +
                        "'");
    return l.substr(key.size() + 1);
  }

  Vector read_vector(int n) {
    std::stringstream ss(line());
    Vector v(n);
    for (int i = 0; i < n; ++i)
      if (!(ss >> v[i])) throw usage_error("model file: short vector row");
    return v;
  }

  Matrix read_matrix(int rows, int cols) {
    Matrix m(rows, cols);
    for (int r = 0; r < rows; ++r) m.row(r) = read_vector(cols).transpose();
    return m;
  }

  bool at_eof() { return is_.peek() == std::char_traits<char>::eof(); }

 private:
  std::istream& is_;
};

}  // namespace

void save_model(std::ostream& os, const ModelFile& model) {
  model.dictionary.validate();
  os << "koopman-model v1\n";
  os << "[dictionary]\n";
  os << "q " << model.dictionary.q() << "\n";
  os << "append_one " << (model.append_one ? 1 : 0) << "\n";
  for (int i = 0; i < model.dictionary.q(); ++i) {
    const auto& p = model.dictionary.node_params[i];
    os << "[block " << i << "]\n";
    os << "coords";
    for (int c : model.dictionary.partition.blocks[i]) os << " " << c;
    os << "\n";
    os << "activation " << activation_name(p.activation) << "\n";
    os << "augment " << (p.augment_state ? 1 : 0) << "\n";
    os << "layers " << p.layer_count() << "\n";
    for (const auto& layer : p.layers) {
      os << "layer " << layer.rows() << " " << layer.cols() << "\n";
      write_matrix(os, layer);
    }
  }
  os << "[koopman]\n";
  os << "dim " << model.k.rows() << "\n";
  write_matrix(os, model.k);
  os << "[normalization]\n";
  os << "enabled " << (model.norm.enabled ? 1 : 0) << "\n";
  if (model.norm.enabled) {
    os << "dim " << model.norm.offset.size() << "\n";
    os << "offset ";
    write_vector(os, model.norm.offset);
    os << "scale ";
    write_vector(os, model.norm.scale);
  }
  os << "[metadata]\n";
  for (const auto& [key, value] : model.metadata)
    os << key << " " << value << "\n";
}

ModelFile load_model(std::istream& is) {
  Reader r(is);
  r.expect("koopman-model v1");
  r.expect("[dictionary]");
  ModelFile model;
  const int q = std::stoi(r.field("q"));
  model.append_one = std::stoi(r.field("append_one")) != 0;
  for (int i = 0; i < q; ++i) {
    r.expect("[block " + std::to_string(i) + "]");
    std::stringstream coords(r.field("coords"));
    std::vector<int> block;
    for (int c; coords >> c;) block.push_back(c);
    model.dictionary.partition.blocks.push_back(std::move(block));
    DictionaryParams p;
    p.activation = activation_from_name(r.field("activation"));
    p.augment_state = std::stoi(r.field("augment")) != 0;
    const int layers = std::stoi(r.field("layers"));
    for (int l = 0; l < layers; ++l) {
      std::stringstream dims(r.field("layer"));
      int rows = 0, cols = 0;
      dims >> rows >> cols;
      if (rows < 1 || cols < 1)
        throw usage_error("model file: bad layer dimensions");
      p.layers.push_back(r.read_matrix(rows, cols));
    }
    model.dictionary.node_params.push_back(std::move(p));
  }
  model.dictionary.validate();
  r.expect("[koopman]");
  const int dim = std::stoi(r.field("dim"));
  if (dim != model.dictionary.lift_dim())
    throw usage_error("model file: K dimension does not match the dictionary");
  model.k = r.read_matrix(dim, dim);
  r.expect("[normalization]");
  model.norm.enabled = std::stoi(r.field("enabled")) != 0;
  if (model.norm.enabled) {
    const int nd = std::stoi(r.field("dim"));
    std::stringstream off(r.field("offset")), sc(r.field("scale"));
    model.norm.offset.resize(nd);
    model.norm.scale.resize(nd);
    for (int i = 0; i < nd; ++i)
      if (!(off >> model.norm.offset[i]) || !(sc >> model.norm.scale[i]))
        throw usage_error("model file: bad normalization row");
  }
  r.expect("[metadata]");
  while (!r.at_eof()) {
    const std::string l = r.line();
    if (l.empty()) continue;
    const auto sp = l.find(' ');
    if (sp == std::string::npos)
      model.metadata.emplace_back(l, "");
    else
      model.metadata.emplace_back(l.substr(0, sp), l.substr(sp + 1));
  }
  return model;
}

void save_model_file(const std::string& path, const ModelFile& model) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw usage_error("cannot open for writing: " + path);
  save_model(os, model);
}

ModelFile load_model_file(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw usage_error("cannot open: " + path);
  return load_model(is);
}

}  // namespace koopman

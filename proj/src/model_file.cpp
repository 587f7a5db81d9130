#include "ein/model_file.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>

#include "ein/errors.hpp"

namespace ein {

namespace {

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_tokens(std::ostream& out, const char* key, const std::vector<std::string>& tokens) {
  out << key << ' ' << tokens.size();
  for (const std::string& t : tokens) out << ' ' << t;
  out << '\n';
}

template <typename Derived>
void write_values(std::ostream& out, const Eigen::DenseBase<Derived>& values) {
  for (Eigen::Index i = 0; i < values.size(); ++i) out << ' ' << number(values.derived()(i));
}

class Reader {
 public:
  Reader(std::istream& in, std::string source) : in_(in), source_(std::move(source)) {}

  // Next line split into fields; its first field must be `key`.
  std::vector<std::string> record(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file, expected '" + key + "'");
    ++line_;
    std::istringstream ss(line);
    std::vector<std::string> fields;
    for (std::string f; ss >> f;) fields.push_back(f);
    if (fields.empty() || fields[0] != key) fail("expected '" + key + "'");
    fields.erase(fields.begin());
    return fields;
  }

  std::string rest(const std::string& key) {
    std::string line;
    if (!std::getline(in_, line)) fail("unexpected end of file, expected '" + key + "'");
    ++line_;
    if (line.rfind(key + ' ', 0) != 0) fail("expected '" + key + "'");
    return line.substr(key.size() + 1);
  }

  std::vector<std::string> single(const std::string& key) {
    auto f = record(key);
    if (f.size() != 1) fail("'" + key + "' takes one value");
    return f;
  }

  long long integer(const std::string& s) {
    try {
      std::size_t used = 0;
      const long long v = std::stoll(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad integer '" + s + "'");
  }

  std::uint64_t unsigned_integer(const std::string& s) {
    try {
      std::size_t used = 0;
      const unsigned long long v = std::stoull(s, &used);
      if (used == s.size() && s[0] != '-') return v;
    } catch (const std::exception&) {
    }
    fail("bad unsigned integer '" + s + "'");
  }

  double real(const std::string& s) {
    try {
      std::size_t used = 0;
      const double v = std::stod(s, &used);
      if (used == s.size()) return v;
    } catch (const std::exception&) {
    }
    fail("bad number '" + s + "'");
  }

  std::vector<std::string> tokens(const std::string& key) {
    auto f = record(key);
    if (f.empty()) fail("'" + key + "' needs a count");
    const long long n = integer(f[0]);
    if (n < 0 || static_cast<std::size_t>(n) != f.size() - 1) fail("'" + key + "' count mismatch");
    return {f.begin() + 1, f.end()};
  }

  Eigen::VectorXd values(const std::vector<std::string>& fields, std::size_t from, Eigen::Index n) {
    if (fields.size() != from + static_cast<std::size_t>(n)) fail("expected " + std::to_string(n) + " values");
    Eigen::VectorXd v(n);
    for (Eigen::Index i = 0; i < n; ++i) v(i) = real(fields[from + static_cast<std::size_t>(i)]);
    return v;
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(source_, line_, what); }

 private:
  std::istream& in_;
  std::string source_;
  std::size_t line_ = 0;
};

}  // namespace

const std::string& ModelFile::class_token(int c) const {
  return class_tokens.at(static_cast<std::size_t>(model.classes.at(static_cast<std::size_t>(c))));
}

void save_model(std::ostream& out, const ModelFile& file) {
  const Network<double>& net = file.model.network;
  out << "ein-model " << kModelFormatVersion << '\n';
  out << "activation " << to_string(net.activation) << '\n';
  out << "leaky_slope " << number(net.leaky_slope) << '\n';
  out << "k " << file.k << '\n';
  out << "maxpat " << file.maxpat << '\n';
  out << "seed " << file.seed << '\n';
  out << "split_seed " << file.split_seed << '\n';
  out << "lambda " << number(file.lambda) << '\n';
  out << "dataset " << file.dataset << '\n';
  write_tokens(out, "class_tokens", file.class_tokens);
  write_tokens(out, "node_tokens", file.node_tokens);
  write_tokens(out, "edge_tokens", file.edge_tokens);
  out << "classes " << file.model.classes.size();
  for (int c : file.model.classes) out << ' ' << c;
  out << '\n';
  out << "bias " << net.gml_bias.size();
  write_values(out, net.gml_bias);
  out << '\n';
  out << "layers " << net.layers.size() << '\n';
  for (const Layer<double>& layer : net.layers) {
    out << "weight " << layer.weight.rows() << ' ' << layer.weight.cols();
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rows = layer.weight;
    write_values(out, rows.reshaped<Eigen::RowMajor>());
    out << '\n';
    out << "layer_bias " << layer.bias.size();
    write_values(out, layer.bias);
    out << '\n';
  }
  const auto selected = file.model.selected();
  out << "patterns " << selected.size() << '\n';
  for (const SelectedPattern* p : selected) {
    out << "pattern " << to_string(p->code);
    write_values(out, p->beta);
    out << '\n';
  }
  out << "end\n";
}

void save_model(const std::filesystem::path& path, const ModelFile& file) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  save_model(out, file);
  if (!out) throw Error("failed writing " + path.string());
}

ModelFile load_model(std::istream& in, const std::string& source) {
  Reader r(in, source);
  ModelFile file;
  Network<double>& net = file.model.network;

  if (r.integer(r.single("ein-model")[0]) != kModelFormatVersion) r.fail("unsupported format version");
  try {
    net.activation = parse_activation(r.single("activation")[0]);
  } catch (const DomainError& e) {
    r.fail(e.what());
  }
  net.leaky_slope = r.real(r.single("leaky_slope")[0]);
  file.k = static_cast<int>(r.integer(r.single("k")[0]));
  file.maxpat = static_cast<int>(r.integer(r.single("maxpat")[0]));
  file.seed = r.unsigned_integer(r.single("seed")[0]);
  file.split_seed = r.unsigned_integer(r.single("split_seed")[0]);
  file.lambda = r.real(r.single("lambda")[0]);
  file.dataset = r.rest("dataset");
  file.class_tokens = r.tokens("class_tokens");
  file.node_tokens = r.tokens("node_tokens");
  file.edge_tokens = r.tokens("edge_tokens");
  for (const std::string& c : r.tokens("classes")) {
    const long long id = r.integer(c);
    if (id < 0 || static_cast<std::size_t>(id) >= file.class_tokens.size()) r.fail("class id without token");
    file.model.classes.push_back(static_cast<int>(id));
  }
  if (file.model.classes.size() < 2) r.fail("a model needs at least two classes");
  if (file.k < 1) r.fail("k must be >= 1");

  auto bias = r.record("bias");
  if (bias.empty() || r.integer(bias[0]) != file.k) r.fail("bias length must equal k");
  net.gml_bias = r.values(bias, 1, file.k);

  const long long layers = r.integer(r.single("layers")[0]);
  if (layers < 1) r.fail("at least one layer required");
  Eigen::Index width = file.k;
  for (long long l = 0; l < layers; ++l) {
    auto w = r.record("weight");
    if (w.size() < 2) r.fail("weight needs a shape");
    const long long rows = r.integer(w[0]);
    const long long cols = r.integer(w[1]);
    if (rows < 1 || cols != width) r.fail("layer shape does not chain");
    Eigen::VectorXd flat = r.values(w, 2, rows * cols);
    Layer<double> layer;
    layer.weight = flat.reshaped<Eigen::RowMajor>(rows, cols);
    auto b = r.record("layer_bias");
    if (b.empty() || r.integer(b[0]) != rows) r.fail("layer bias length mismatch");
    layer.bias = r.values(b, 1, rows);
    net.layers.push_back(std::move(layer));
    width = rows;
  }
  if (width != static_cast<Eigen::Index>(file.model.classes.size())) {
    r.fail("output width does not match the class count");
  }

  const long long count = r.integer(r.single("patterns")[0]);
  if (count < 0) r.fail("negative pattern count");
  for (long long i = 0; i < count; ++i) {
    auto f = r.record("pattern");
    if (f.empty()) r.fail("pattern needs a code");
    SelectedPattern p;
    try {
      p.code = parse_code(f[0]);
    } catch (const Error& e) {
      r.fail(e.what());
    }
    if (!is_min_code(p.code)) r.fail("pattern code is not canonical");
    p.beta = r.values(f, 1, file.k);
    file.model.patterns.push_back(std::move(p));
  }
  r.record("end");
  return file;
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path.string(), 0, "cannot open file");
  return load_model(in, path.string());
}

}  // namespace ein

#include "cli.hpp"

#include <bit>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "csv_io.hpp"
#include "streamforge/streamforge.hpp"

namespace fs = std::filesystem;

namespace streamforge::cli {
namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

Seed parse_seed(const std::string& text)
{
  std::vector<std::uint64_t> v;
  for (const auto& field : split_csv_line(text)) {
    std::uint64_t x = 0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), x);
    if (field.empty() || ec != std::errc{} || ptr != field.data() + field.size() ||
        x > 0xffffffffull)
      throw Error(Errc::invalid_seed, "'" + field + "' is not a valid seed integer");
    v.push_back(x);
  }
  if (v.size() != 6)
    throw Error(Errc::invalid_seed, "seed needs 6 integers, got " + std::to_string(v.size()));
  Seed s{};
  for (int k = 0; k < 6; ++k)
    s[k] = static_cast<std::uint32_t>(v[k]);
  validate_seed(s);
  return s;
}

/// "AxB" or "A,B".
std::pair<std::size_t, std::size_t> parse_pair(const std::string& text, const char* what)
{
  const auto sep = text.find_first_of("x,");
  if (sep == std::string::npos)
    throw UsageError(std::string(what) + " must look like AxB, got '" + text + "'");
  std::size_t a = 0, b = 0;
  const std::string left = trim(text.substr(0, sep));
  const std::string right = trim(text.substr(sep + 1));
  const auto r1 = std::from_chars(left.data(), left.data() + left.size(), a);
  const auto r2 = std::from_chars(right.data(), right.data() + right.size(), b);
  if (left.empty() || right.empty() || r1.ec != std::errc{} || r2.ec != std::errc{} ||
      r1.ptr != left.data() + left.size() || r2.ptr != right.data() + right.size() || a == 0 ||
      b == 0)
    throw UsageError(std::string(what) + " must be two positive integers, got '" + text + "'");
  return {a, b};
}

WorkGrid parse_grid(const std::string& text)
{
  const auto [a, b] = parse_pair(text, "--grid");
  return {a, b};
}

/// Accepts plain integers and exponent notation such as 1e6.
std::uint64_t parse_count(const std::string& text, const char* what)
{
  std::size_t used = 0;
  double v = 0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (text.empty() || used != text.size() || !std::isfinite(v) || v != std::floor(v) || v < 1 ||
      v > 9.0e15)
    throw UsageError(std::string(what) + " must be a positive integer, got '" + text + "'");
  return static_cast<std::uint64_t>(v);
}

void write_text_file(const fs::path& path, const std::string& content)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error(Errc::io_failure, "cannot write " + path.string());
  f << content;
  if (!f)
    throw Error(Errc::io_failure, "cannot write " + path.string());
}

/// Binary field: uint32 rows, uint32 cols, uint64 value count, then the
/// values as little-endian doubles in row-major order.
void write_field_binary(const fs::path& path, std::uint32_t ny, std::uint32_t nx,
                        std::span<const double> values)
{
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f)
    throw Error(Errc::io_failure, "cannot write " + path.string());
  const auto put = [&f](auto v) {
    unsigned char bytes[sizeof v];
    std::memcpy(bytes, &v, sizeof v);
    if constexpr (std::endian::native == std::endian::big)
      std::reverse(std::begin(bytes), std::end(bytes));
    f.write(reinterpret_cast<const char*>(bytes), sizeof v);
  };
  put(ny);
  put(nx);
  put(static_cast<std::uint64_t>(values.size()));
  for (double v : values)
    put(v);
  if (!f)
    throw Error(Errc::io_failure, "cannot write " + path.string());
}

std::string field_csv(std::span<const double> values, std::size_t nx)
{
  std::ostringstream os;
  for (std::size_t k = 0; k < values.size(); ++k) {
    os << format_double(values[k]);
    os << ((k + 1) % nx == 0 ? '\n' : ',');
  }
  return os.str();
}

void print_stream_matrix(std::ostream& os, const StreamSet& set)
{
  std::vector<std::string> headers;
  std::vector<std::size_t> widths;
  for (std::size_t s = 0; s < set.count(); ++s) {
    headers.push_back("[," + std::to_string(s + 1) + "]");
    std::size_t w = headers.back().size();
    for (auto v : set[s].current())
      w = std::max(w, std::to_string(v).size());
    for (auto v : set[s].initial())
      w = std::max(w, std::to_string(v).size());
    widths.push_back(w);
  }
  os << std::string(5, ' ');
  for (std::size_t s = 0; s < set.count(); ++s)
    os << ' ' << std::setw(static_cast<int>(widths[s])) << headers[s];
  os << '\n';
  for (int row = 0; row < 12; ++row) {
    os << std::setw(5) << ("[" + std::to_string(row + 1) + ",]");
    for (std::size_t s = 0; s < set.count(); ++s) {
      const auto v = row < 6 ? set[s].current()[row] : set[s].initial()[row - 6];
      os << ' ' << std::setw(static_cast<int>(widths[s])) << v;
    }
    os << '\n';
  }
}

struct Options {
  // streams
  std::size_t n_streams = 1024;
  std::string seed;
  std::string out_path;
  std::string in_path;
  bool force = false;
  // shared
  std::string streams_path;
  std::string grid = "64x8";
  unsigned threads = 0;
  // generate
  std::string kind = "uniform";
  std::string n_vector;
  std::string dims;
  double rate = 1.0;
  std::size_t npad = 0;
  // fisher
  std::string table_path;
  std::string replicates;
  std::string stats_out;
  // grf
  std::string params_path;
  std::size_t nx = 0;
  std::size_t ny = 0;
  double cell_size = 1.0;
  double origin_x = 0.0;
  double origin_y = 0.0;
  std::size_t realizations = 1;
  std::string out_dir;
  std::string format = "csv";
};

int cmd_streams_create(const Options& o, std::ostream& out)
{
  if (o.n_streams == 0)
    throw Error(Errc::invalid_argument, "--n must be at least 1");
  const CreatorState creator = o.seed.empty() ? CreatorState{} : set_base_creator(parse_seed(o.seed));
  const fs::path path(o.out_path);
  if (fs::exists(path) && !o.force)
    throw UsageError(path.string() + " exists; pass --force to overwrite");
  const auto created = create_streams(creator, o.n_streams);
  save_streams(created.set, path);
  const Seed& next = created.creator.next_seed;
  out << "streams=" << created.set.count() << '\n' << "next_seed=";
  for (int k = 0; k < 6; ++k)
    out << (k ? "," : "") << next[k];
  out << '\n';
  return exit_ok;
}

int cmd_streams_info(const Options& o, std::ostream& out)
{
  const StreamSet set = load_streams(fs::path(o.in_path));
  print_stream_matrix(out, set);
  return exit_ok;
}

ExecOptions exec_of(const Options& o) { return ExecOptions{o.threads}; }

int cmd_generate(const Options& o, std::ostream& out)
{
  if (o.n_vector.empty() == o.dims.empty())
    throw UsageError("give exactly one of --n or --dims");
  FillRequest req;
  if (!o.n_vector.empty()) {
    req.shape = Shape::vector(parse_count(o.n_vector, "--n"));
  } else {
    const auto [r, c] = parse_pair(o.dims, "--dims");
    req.shape = Shape::matrix(r, c);
  }
  req.grid = parse_grid(o.grid);
  req.rate = o.rate;
  req.npad = o.npad;
  req.exec = exec_of(o);

  StreamSet set = load_streams(fs::path(o.streams_path));
  std::ostringstream csv;
  if (o.kind == "uniform")
    write_matrix_csv(csv, fill_uniform(set, req));
  else if (o.kind == "integer")
    write_matrix_csv(csv, fill_uniform_integer(set, req));
  else if (o.kind == "normal")
    write_matrix_csv(csv, fill_normal(set, req));
  else if (o.kind == "exponential")
    write_matrix_csv(csv, fill_exponential(set, req));
  else
    throw UsageError("unknown --kind '" + o.kind + "'");

  if (o.out_path.empty())
    out << csv.str();
  else
    write_text_file(o.out_path, csv.str());
  save_streams(set, fs::path(o.streams_path));
  return exit_ok;
}

int cmd_fisher(const Options& o, std::ostream& out)
{
  const ContingencyTable table = read_table_csv(o.table_path);
  const std::uint64_t n = parse_count(o.replicates, "--N");
  const WorkGrid grid = parse_grid(o.grid);
  StreamSet set = load_streams(fs::path(o.streams_path));

  FisherOptions fo;
  fo.return_statistics = !o.stats_out.empty();
  fo.exec = exec_of(o);
  const FisherResult r = fisher_sim(table, n, set, grid, fo);

  if (!o.stats_out.empty()) {
    std::ostringstream os;
    os << "statistic\n";
    for (double s : r.statistics)
      os << format_double(s) << '\n';
    write_text_file(o.stats_out, os.str());
  }
  save_streams(set, fs::path(o.streams_path));

  out << "threshold=" << format_double(r.threshold) << '\n'
      << "simNum=" << r.sim_num << '\n'
      << "counts=" << r.counts << '\n'
      << "p.value=" << format_double(r.p_value) << '\n';
  return exit_ok;
}

int cmd_grf(const Options& o, std::ostream& out)
{
  if (o.format != "csv" && o.format != "bin")
    throw UsageError("--format must be csv or bin");
  if (o.realizations == 0)
    throw UsageError("--realizations must be at least 1");
  const std::vector<MaternParams> params = read_params_csv(o.params_path);
  GridSpec grid{o.nx, o.ny, o.cell_size, o.origin_x, o.origin_y};
  grid.validate();

  const fs::path dir(o.out_dir);
  const fs::path manifest = dir / "manifest.csv";
  if (fs::exists(manifest) && !o.force)
    throw UsageError(manifest.string() + " exists; pass --force to overwrite");

  StreamSet set = load_streams(fs::path(o.streams_path));
  GrfOptions go;
  go.work_grid = parse_grid(o.grid);
  go.exec = exec_of(o);
  const RealizationStack stack = simulate_grf(params, grid, o.realizations, set, go);

  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec)
    throw Error(Errc::io_failure, "cannot create " + dir.string());

  std::ostringstream man;
  man << "file,param_row,realization,shape,range,variance,anisoRatio,anisoAngleRadians\n";
  for (std::size_t b = 0; b < stack.batch_count; ++b)
    for (std::size_t r = 0; r < stack.realizations; ++r) {
      const std::string name = "field_p" + std::to_string(b + 1) + "_r" + std::to_string(r + 1) +
                               (o.format == "csv" ? ".csv" : ".bin");
      if (o.format == "csv")
        write_text_file(dir / name, field_csv(stack.field(b, r), stack.nx));
      else
        write_field_binary(dir / name, static_cast<std::uint32_t>(stack.ny),
                           static_cast<std::uint32_t>(stack.nx), stack.field(b, r));
      const MaternParams& p = params[b];
      man << name << ',' << b + 1 << ',' << r + 1 << ',' << format_double(p.shape) << ','
          << format_double(p.range) << ',' << format_double(p.variance) << ','
          << format_double(p.aniso_ratio) << ',' << format_double(p.aniso_angle) << '\n';
    }
  write_text_file(manifest, man.str());
  save_streams(set, fs::path(o.streams_path));
  out << "fields=" << stack.field_count() << '\n' << "manifest=" << manifest.string() << '\n';
  return exit_ok;
}

} // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err)
{
  Options o;
  CLI::App app{"Reproducible parallel random streams, Monte Carlo Fisher tests and Gaussian "
               "random fields"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all", "Expand all help");

  auto* streams = app.add_subcommand("streams", "Create or inspect stream files");
  streams->require_subcommand(1);
  auto* create = streams->add_subcommand("create", "Create streams and write a stream file");
  create->add_option("--n", o.n_streams, "Number of streams")->capture_default_str();
  create->add_option("--seed", o.seed, "Creator seed: six comma-separated integers");
  create->add_option("--out", o.out_path, "Stream file to write")->required();
  create->add_flag("--force", o.force, "Overwrite an existing file");
  auto* info = streams->add_subcommand("info", "Print the 12 x n state matrix");
  info->add_option("--in", o.in_path, "Stream file")->required();

  const auto add_common = [&o](CLI::App* sub) {
    sub->add_option("--streams", o.streams_path, "Stream file (updated in place)")->required();
    sub->add_option("--grid", o.grid, "Work items, AxB")->capture_default_str();
    sub->add_option("--threads", o.threads, "Worker threads (default: STREAMFORGE_THREADS or all cores)");
  };

  auto* generate = app.add_subcommand("generate", "Fill a vector or matrix with random variates");
  add_common(generate);
  generate->add_option("--kind", o.kind, "uniform | integer | normal | exponential")
      ->capture_default_str();
  generate->add_option("--n", o.n_vector, "Vector length");
  generate->add_option("--dims", o.dims, "Matrix dimensions, RxC");
  generate->add_option("--rate", o.rate, "Exponential rate")->capture_default_str();
  generate->add_option("--npad", o.npad, "Allocated row width (>= columns)");
  generate->add_option("--out", o.out_path, "CSV output (default: stdout)");

  auto* fisher = app.add_subcommand("fisher", "Monte Carlo Fisher exact test");
  add_common(fisher);
  fisher->add_option("--table", o.table_path, "Contingency table CSV")->required();
  fisher->add_option("--N", o.replicates, "Requested replicates")->required();
  fisher->add_option("--stats-out", o.stats_out, "Write every simulated statistic here");

  auto* grf = app.add_subcommand("grf", "Simulate Matern Gaussian random fields");
  add_common(grf);
  grf->add_option("--params", o.params_path, "Parameter CSV")->required();
  grf->add_option("--nx", o.nx, "Cells in x")->required();
  grf->add_option("--ny", o.ny, "Cells in y")->required();
  grf->add_option("--cell-size", o.cell_size, "Cell spacing")->capture_default_str();
  grf->add_option("--origin-x", o.origin_x, "Lower-left x");
  grf->add_option("--origin-y", o.origin_y, "Lower-left y");
  grf->add_option("--realizations", o.realizations, "Fields per parameter row")
      ->capture_default_str();
  grf->add_option("--out-dir", o.out_dir, "Output directory")->required();
  grf->add_option("--format", o.format, "csv | bin")->capture_default_str();
  grf->add_flag("--force", o.force, "Overwrite an existing manifest");

  std::vector<const char*> argv;
  for (const auto& a : args)
    argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? exit_ok : exit_usage;
  }

  try {
    if (*create)
      return cmd_streams_create(o, out);
    if (*info)
      return cmd_streams_info(o, out);
    if (*generate)
      return cmd_generate(o, out);
    if (*fisher)
      return cmd_fisher(o, out);
    if (*grf)
      return cmd_grf(o, out);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << '\n';
    return exit_usage;
  } catch (const NotPositiveDefinite& e) {
    err << "error: covariance is not positive definite (batch " << e.batch() << ", pivot "
        << e.pivot() << ")\n";
    return exit_numerical;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return e.code() == Errc::io_failure ? exit_io : exit_usage;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << '\n';
    return exit_io;
  } catch (const std::bad_alloc&) {
    err << "error: out of memory\n";
    return exit_numerical;
  }
  return exit_usage;
}

} // namespace streamforge::cli

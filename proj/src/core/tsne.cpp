#include "tsne.hpp"

#include "csv.hpp"
#include "error.hpp"
#include "rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

namespace a2v::tsne {

void TsneConfig::validate(std::size_t n) const {
  if (n < 10) throw std::invalid_argument("tsne: need at least 10 points");
  if (theta < 0 || theta > 1) throw std::invalid_argument("tsne: theta outside [0, 1]");
  if (iterations < 1) throw std::invalid_argument("tsne: iterations < 1");
  if (!(perplexity > 0)) throw std::invalid_argument("tsne: perplexity <= 0");
  if (perplexity >= (static_cast<double>(n) - 1.0) / 3.0)
    throw std::invalid_argument("tsne: perplexity must be below (n-1)/3");
}

std::vector<double> perplexity_calibration(std::span<const double> sq_distances,
                                           double target_perplexity) {
  std::size_t m = sq_distances.size();
  if (m == 0) throw std::invalid_argument("perplexity_calibration: empty distance row");
  if (!(target_perplexity > 0) || target_perplexity >= static_cast<double>(m))
    throw std::invalid_argument("perplexity_calibration: target must be in (0, n-1)");

  double dmin = *std::min_element(sq_distances.begin(), sq_distances.end());
  double log_target = std::log(target_perplexity);
  double beta = 1.0;
  double beta_min = -std::numeric_limits<double>::infinity();
  double beta_max = std::numeric_limits<double>::infinity();

  std::vector<double> p(m);
  for (int iter = 0; iter < 200; ++iter) {
    double sum = 0, weighted = 0;
    for (std::size_t j = 0; j < m; ++j) {
      p[j] = std::exp(-beta * (sq_distances[j] - dmin));
      sum += p[j];
      weighted += (sq_distances[j] - dmin) * p[j];
    }
    if (!(sum > 0) || !std::isfinite(sum))
      throw NumericError("perplexity_calibration: kernel sum degenerated, cannot bracket");
    double entropy = std::log(sum) + beta * weighted / sum;
    double diff = entropy - log_target;
    if (std::abs(diff) < 1e-5) break;
    if (diff > 0) {
      beta_min = beta;
      beta = std::isinf(beta_max) ? beta * 2.0 : (beta + beta_max) / 2.0;
    } else {
      beta_max = beta;
      beta = std::isinf(beta_min) ? beta / 2.0 : (beta + beta_min) / 2.0;
    }
  }
  double sum = 0;
  for (std::size_t j = 0; j < m; ++j) {
    p[j] = std::exp(-beta * (sq_distances[j] - dmin));
    sum += p[j];
  }
  for (double& v : p) v /= sum;
  return p;
}

Matrix input_affinities(const Matrix& x, double perplexity) {
  std::size_t n = x.rows;
  Matrix p(n, n);
  std::vector<double> row(n - 1);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t c = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) row[c++] = squared_distance(x.row_span(i), x.row_span(j));
    auto cond = perplexity_calibration(row, perplexity);
    c = 0;
    for (std::size_t j = 0; j < n; ++j)
      if (j != i) p.at(i, j) = cond[c++];
  }
  // symmetrize: p_ij = (p_{j|i} + p_{i|j}) / 2n
  double inv = 1.0 / (2.0 * static_cast<double>(n));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double v = (p.at(i, j) + p.at(j, i)) * inv;
      p.at(i, j) = v;
      p.at(j, i) = v;
    }
  for (std::size_t i = 0; i < n; ++i) p.at(i, i) = 0;
  return p;
}

namespace {

// quadtree over the 2-d layout; leaves merge exactly coincident points
class QuadTree {
public:
  explicit QuadTree(const Matrix& y) {
    double min_x = y.at(0, 0), max_x = min_x, min_y = y.at(0, 1), max_y = min_y;
    for (std::size_t i = 1; i < y.rows; ++i) {
      min_x = std::min(min_x, y.at(i, 0));
      max_x = std::max(max_x, y.at(i, 0));
      min_y = std::min(min_y, y.at(i, 1));
      max_y = std::max(max_y, y.at(i, 1));
    }
    double cx = (min_x + max_x) / 2, cy = (min_y + max_y) / 2;
    double half = std::max(max_x - min_x, max_y - min_y) / 2 + 1e-9;
    nodes_.push_back(Node{cx, cy, half});
    for (std::size_t i = 0; i < y.rows; ++i) insert(0, y.at(i, 0), y.at(i, 1));
  }

  // Accumulates the repulsive numerator sum_j t^2 (q - y_j) into (fx, fy)
  // and returns this point's contribution to the normalizer sum_j t.
  double repulsion(double qx, double qy, double theta, double& fx, double& fy) const {
    double z = 0;
    fx = 0;
    fy = 0;
    walk(0, qx, qy, theta, fx, fy, z);
    return z;
  }

private:
  struct Node {
    double cx, cy, half;     // cell bounds
    double com_x = 0, com_y = 0;
    long count = 0;
    int child[4] = {-1, -1, -1, -1};
    bool is_leaf = true;
    double px = 0, py = 0;   // leaf position
  };

  std::vector<Node> nodes_;

  int quadrant(const Node& n, double x, double y) const {
    return (x >= n.cx ? 1 : 0) + (y >= n.cy ? 2 : 0);
  }

  void insert(int idx, double x, double y) {
    for (;;) {
      {
        Node& n = nodes_[idx];
        if (n.is_leaf) {
          if (n.count == 0) {
            n.px = x;
            n.py = y;
            n.com_x = x;
            n.com_y = y;
            n.count = 1;
            return;
          }
          if ((n.px == x && n.py == y) || n.half < 1e-12) {
            // coincident points share the leaf
            n.com_x = (n.com_x * n.count + x) / (n.count + 1);
            n.com_y = (n.com_y * n.count + y) / (n.count + 1);
            ++n.count;
            return;
          }
          // split: push the resident point down, then fall through as internal
          double rx = n.px, ry = n.py;
          long resident = n.count;
          n.is_leaf = false;
          int q = quadrant(n, rx, ry);
          int child = make_child(idx, q); // may reallocate nodes_
          Node& cn = nodes_[child];
          cn.px = rx;
          cn.py = ry;
          cn.com_x = rx;
          cn.com_y = ry;
          cn.count = resident;
        }
      }
      // internal node: absorb the point into the aggregate, then descend
      Node& n = nodes_[idx];
      n.com_x = (n.com_x * n.count + x) / (n.count + 1);
      n.com_y = (n.com_y * n.count + y) / (n.count + 1);
      ++n.count;
      int q = quadrant(n, x, y);
      idx = n.child[q] >= 0 ? n.child[q] : make_child(idx, q);
    }
  }

  int make_child(int parent, int q) {
    Node& p = nodes_[parent];
    double h = p.half / 2;
    Node c{p.cx + ((q & 1) ? h : -h), p.cy + ((q & 2) ? h : -h), h};
    nodes_.push_back(c);
    int idx = static_cast<int>(nodes_.size()) - 1;
    nodes_[parent].child[q] = idx;
    return idx;
  }

  void walk(int idx, double qx, double qy, double theta, double& fx, double& fy,
            double& z) const {
    const Node& n = nodes_[idx];
    if (n.count == 0) return;
    double dx = qx - n.com_x, dy = qy - n.com_y;
    double d2 = dx * dx + dy * dy;
    if (n.is_leaf) {
      if (n.px == qx && n.py == qy) {
        z += static_cast<double>(n.count - 1); // coincident neighbours; self excluded
        return;
      }
      double t = 1.0 / (1.0 + d2);
      z += n.count * t;
      fx += n.count * t * t * dx;
      fy += n.count * t * t * dy;
      return;
    }
    double width = 2.0 * n.half;
    if (d2 > 0 && width / std::sqrt(d2) < theta) {
      double t = 1.0 / (1.0 + d2);
      z += n.count * t;
      fx += n.count * t * t * dx;
      fy += n.count * t * t * dy;
      return;
    }
    for (int c : n.child)
      if (c >= 0) walk(c, qx, qy, theta, fx, fy, z);
  }
};

} // namespace

Matrix kl_gradient(const Matrix& p, const Matrix& y, double theta) {
  std::size_t n = y.rows;
  Matrix grad(n, 2);

  // attractive part: sum_j p_ij t_ij (y_i - y_j)
  for (std::size_t i = 0; i < n; ++i) {
    double ax = 0, ay = 0;
    double yi0 = y.at(i, 0), yi1 = y.at(i, 1);
    const double* prow = p.row(i);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double dx = yi0 - y.at(j, 0), dy = yi1 - y.at(j, 1);
      double t = 1.0 / (1.0 + dx * dx + dy * dy);
      double pt = prow[j] * t;
      ax += pt * dx;
      ay += pt * dy;
    }
    grad.at(i, 0) = ax;
    grad.at(i, 1) = ay;
  }

  // repulsive part via the tree, shared normalizer accumulated first
  QuadTree tree(y);
  Matrix rep(n, 2);
  double z_total = 0;
  for (std::size_t i = 0; i < n; ++i) {
    double fx, fy;
    z_total += tree.repulsion(y.at(i, 0), y.at(i, 1), theta, fx, fy);
    rep.at(i, 0) = fx;
    rep.at(i, 1) = fy;
  }
  if (!(z_total > 0)) throw NumericError("tsne: degenerate layout, zero normalizer");

  for (std::size_t i = 0; i < n; ++i) {
    grad.at(i, 0) = 4.0 * (grad.at(i, 0) - rep.at(i, 0) / z_total);
    grad.at(i, 1) = 4.0 * (grad.at(i, 1) - rep.at(i, 1) / z_total);
  }
  return grad;
}

double kl_divergence(const Matrix& p, const Matrix& y) {
  std::size_t n = y.rows;
  double z = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      double dx = y.at(i, 0) - y.at(j, 0), dy = y.at(i, 1) - y.at(j, 1);
      z += 2.0 / (1.0 + dx * dx + dy * dy);
    }
  double kl = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double pij = p.at(i, j);
      if (pij <= 0) continue;
      double dx = y.at(i, 0) - y.at(j, 0), dy = y.at(i, 1) - y.at(j, 1);
      double qij = 1.0 / ((1.0 + dx * dx + dy * dy) * z);
      kl += pij * std::log(pij / std::max(qij, 1e-300));
    }
  return kl;
}

Matrix initial_layout(std::size_t n, std::uint64_t seed) {
  Matrix y(n, 2);
  Rng rng(seed);
  for (double& v : y.data) v = 1e-4 * rng.normal();
  return y;
}

TsneResult run_tsne(const Matrix& x, const TsneConfig& config) {
  config.validate(x.rows);
  std::size_t n = x.rows;

  Matrix p = input_affinities(x, config.perplexity);
  for (double& v : p.data) v *= config.early_exaggeration;

  Matrix y = initial_layout(n, config.seed);
  Matrix increment(n, 2);
  Matrix gains(n, 2, 1.0);

  for (int iter = 0; iter < config.iterations; ++iter) {
    if (iter == config.exaggeration_iters)
      for (double& v : p.data) v /= config.early_exaggeration;
    double momentum =
        iter < config.momentum_switch_iter ? config.initial_momentum : config.final_momentum;

    Matrix grad = kl_gradient(p, y, config.theta);
    for (std::size_t idx = 0; idx < y.data.size(); ++idx) {
      double g = grad.data[idx];
      double& gain = gains.data[idx];
      gain = (g > 0) == (increment.data[idx] > 0) ? gain * 0.8 : gain + 0.2;
      gain = std::max(gain, 0.01);
      increment.data[idx] = momentum * increment.data[idx] - config.learning_rate * gain * g;
      y.data[idx] += increment.data[idx];
      if (!std::isfinite(y.data[idx]))
        throw NumericError("tsne: NaN in layout at iteration " + std::to_string(iter));
    }
    // recenter
    double mx = 0, my = 0;
    for (std::size_t i = 0; i < n; ++i) {
      mx += y.at(i, 0);
      my += y.at(i, 1);
    }
    mx /= static_cast<double>(n);
    my /= static_cast<double>(n);
    for (std::size_t i = 0; i < n; ++i) {
      y.at(i, 0) -= mx;
      y.at(i, 1) -= my;
    }
  }

  if (config.iterations <= config.exaggeration_iters)
    for (double& v : p.data) v /= config.early_exaggeration;
  TsneResult result;
  result.kl_divergence = kl_divergence(p, y);
  result.points = std::move(y);
  return result;
}

namespace {

// viridis control points, interpolated linearly
struct Color {
  double r, g, b;
};

Color colormap(double t) {
  static constexpr Color stops[] = {
      {0.267, 0.005, 0.329}, {0.283, 0.141, 0.458}, {0.254, 0.265, 0.530},
      {0.207, 0.372, 0.553}, {0.164, 0.471, 0.558}, {0.128, 0.567, 0.551},
      {0.135, 0.659, 0.518}, {0.267, 0.749, 0.441}, {0.478, 0.821, 0.318},
      {0.741, 0.873, 0.150}, {0.993, 0.906, 0.144}};
  t = std::clamp(t, 0.0, 1.0);
  double s = t * 10.0;
  int i = std::min(static_cast<int>(s), 9);
  double f = s - i;
  return {stops[i].r + f * (stops[i + 1].r - stops[i].r),
          stops[i].g + f * (stops[i + 1].g - stops[i].g),
          stops[i].b + f * (stops[i + 1].b - stops[i].b)};
}

std::string hex_color(const Color& c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", static_cast<int>(c.r * 255 + 0.5),
                static_cast<int>(c.g * 255 + 0.5), static_cast<int>(c.b * 255 + 0.5));
  return buf;
}

} // namespace

std::string render_scatter_svg(const Matrix& points, std::span<const long> popularity) {
  if (points.rows != popularity.size())
    throw std::invalid_argument("render_scatter_svg: labels not aligned to points");
  constexpr double size = 800, margin = 40;
  double min_x = 0, max_x = 1, min_y = 0, max_y = 1;
  if (points.rows > 0) {
    min_x = max_x = points.at(0, 0);
    min_y = max_y = points.at(0, 1);
    for (std::size_t i = 1; i < points.rows; ++i) {
      min_x = std::min(min_x, points.at(i, 0));
      max_x = std::max(max_x, points.at(i, 0));
      min_y = std::min(min_y, points.at(i, 1));
      max_y = std::max(max_y, points.at(i, 1));
    }
  }
  double span_x = max_x - min_x > 0 ? max_x - min_x : 1;
  double span_y = max_y - min_y > 0 ? max_y - min_y : 1;
  double max_log = 0;
  for (long pop : popularity) max_log = std::max(max_log, std::log1p(static_cast<double>(pop)));

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << size << "\" height=\"" << size
      << "\" viewBox=\"0 0 " << size << " " << size << "\">\n"
      << "<rect width=\"" << size << "\" height=\"" << size << "\" fill=\"white\"/>\n";
  for (std::size_t i = 0; i < points.rows; ++i) {
    double px = margin + (points.at(i, 0) - min_x) / span_x * (size - 2 * margin);
    double py = size - margin - (points.at(i, 1) - min_y) / span_y * (size - 2 * margin);
    double t = max_log > 0 ? std::log1p(static_cast<double>(popularity[i])) / max_log : 0.0;
    svg << "<circle cx=\"" << px << "\" cy=\"" << py << "\" r=\"3\" fill=\""
        << hex_color(colormap(t)) << "\" fill-opacity=\"0.75\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void write_layout_csv(std::ostream& out, const Embedding2D& embedding,
                      std::span<const long> popularity) {
  if (embedding.points.rows != popularity.size() ||
      embedding.asset_ids.size() != popularity.size())
    throw std::invalid_argument("write_layout_csv: misaligned inputs");
  out << "asset_id,x,y,popularity\n";
  for (std::size_t i = 0; i < popularity.size(); ++i)
    csv::write_row(out, {embedding.asset_ids[i], csv::format_double(embedding.points.at(i, 0)),
                         csv::format_double(embedding.points.at(i, 1)),
                         std::to_string(popularity[i])});
}

Embedding2D read_layout_csv(std::istream& in, std::vector<long>* popularity) {
  auto rows = csv::read(in);
  if (rows.empty()) throw ParseError("empty layout CSV");
  if (rows[0].fields != std::vector<std::string>{"asset_id", "x", "y", "popularity"})
    throw ParseError("bad layout header", rows[0].line);
  Embedding2D emb;
  emb.points = Matrix(rows.size() - 1, 2);
  if (popularity) popularity->clear();
  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.fields.size() != 4) throw ParseError("expected 4 fields", row.line);
    emb.asset_ids.push_back(row.fields[0]);
    emb.points.at(r - 1, 0) = csv::parse_double(row.fields[1], row.line);
    emb.points.at(r - 1, 1) = csv::parse_double(row.fields[2], row.line);
    if (popularity) popularity->push_back(csv::parse_int(row.fields[3], row.line));
  }
  return emb;
}

} // namespace a2v::tsne

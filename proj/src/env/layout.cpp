#include "tomcat/env/layout.hpp"

#include <deque>
#include <sstream>
#include <stdexcept>

#include "tomcat/core/rng.hpp"

namespace tomcat {

namespace {

Tile tile_from_char(char c, int row, int col) {
  switch (c) {
    case 'X': return Tile::Counter;
    case 'O': return Tile::OnionDispenser;
    case 'D': return Tile::DishDispenser;
    case 'P': return Tile::Pot;
    case 'S': return Tile::ServingStation;
    case ' ': return Tile::Floor;
    default:
      throw std::invalid_argument("layout: unknown character '" + std::string(1, c) +
                                  "' at row " + std::to_string(row) + ", column " +
                                  std::to_string(col));
  }
}

char char_from_tile(Tile t) {
  switch (t) {
    case Tile::Counter: return 'X';
    case Tile::OnionDispenser: return 'O';
    case Tile::DishDispenser: return 'D';
    case Tile::Pot: return 'P';
    case Tile::ServingStation: return 'S';
    case Tile::Floor: return ' ';
  }
  return '?';
}

}  // namespace

const std::vector<Cell>& GridLayout::stations(Tile kind) const {
  switch (kind) {
    case Tile::Pot: return pots_;
    case Tile::OnionDispenser: return onion_dispensers_;
    case Tile::DishDispenser: return dish_dispensers_;
    case Tile::ServingStation: return serving_stations_;
    case Tile::Counter: return counters_;
    default: throw std::invalid_argument("layout: Floor is not a station kind");
  }
}

std::vector<int> GridLayout::floor_distances(Cell from, const std::vector<Cell>& blocked) const {
  std::vector<int> dist(static_cast<size_t>(width_) * height_, -1);
  if (!is_floor(from)) return dist;
  auto idx = [&](Cell c) { return static_cast<size_t>(c.y) * width_ + c.x; };
  for (Cell b : blocked)
    if (in_bounds(b) && !(b == from)) dist[idx(b)] = -2;
  std::deque<Cell> queue{from};
  dist[idx(from)] = 0;
  while (!queue.empty()) {
    Cell c = queue.front();
    queue.pop_front();
    const Cell nbrs[4] = {{c.x, c.y - 1}, {c.x, c.y + 1}, {c.x + 1, c.y}, {c.x - 1, c.y}};
    for (Cell n : nbrs) {
      if (!is_floor(n) || dist[idx(n)] != -1) continue;
      dist[idx(n)] = dist[idx(c)] + 1;
      queue.push_back(n);
    }
  }
  for (int& d : dist)
    if (d == -2) d = -1;
  return dist;
}

int GridLayout::path_distance(Cell a, Cell b) const {
  std::vector<int> d = floor_distances(a);
  int r = dist_at(d, b);
  return r < 0 ? distance_sentinel() : r;
}

std::string GridLayout::to_text() const {
  std::string out;
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out += char_from_tile(tile(x, y));
    out += '\n';
  }
  return out;
}

uint64_t GridLayout::text_hash() const { return hash_string(to_text().c_str()); }

GridLayout parse_layout(const std::string& text) {
  std::vector<std::string> rows;
  std::string row;
  std::istringstream in(text);
  while (std::getline(in, row)) {
    if (!row.empty() && row.back() == '\r') row.pop_back();
    rows.push_back(row);
  }
  while (!rows.empty() && rows.back().empty()) rows.pop_back();
  if (rows.size() < 3) throw std::invalid_argument("layout: needs at least 3 rows");

  GridLayout g;
  g.height_ = static_cast<int>(rows.size());
  g.width_ = static_cast<int>(rows[0].size());
  if (g.width_ < 3) throw std::invalid_argument("layout: needs at least 3 columns");
  for (size_t y = 0; y < rows.size(); ++y) {
    if (static_cast<int>(rows[y].size()) != g.width_)
      throw std::invalid_argument("layout: non-rectangular input: row " + std::to_string(y) +
                                  " has width " + std::to_string(rows[y].size()) +
                                  ", expected " + std::to_string(g.width_));
  }

  g.tiles_.resize(static_cast<size_t>(g.width_) * g.height_);
  for (int y = 0; y < g.height_; ++y) {
    for (int x = 0; x < g.width_; ++x) {
      Tile t = tile_from_char(rows[y][x], y, x);
      bool boundary = x == 0 || y == 0 || x == g.width_ - 1 || y == g.height_ - 1;
      if (boundary && t == Tile::Floor)
        throw std::invalid_argument("layout: open boundary at row " + std::to_string(y) +
                                    ", column " + std::to_string(x));
      g.tiles_[static_cast<size_t>(y) * g.width_ + x] = t;
      Cell c{x, y};
      switch (t) {
        case Tile::Floor: g.spawn_zone_.push_back(c); break;
        case Tile::Pot: g.pots_.push_back(c); break;
        case Tile::OnionDispenser: g.onion_dispensers_.push_back(c); break;
        case Tile::DishDispenser: g.dish_dispensers_.push_back(c); break;
        case Tile::ServingStation: g.serving_stations_.push_back(c); break;
        case Tile::Counter: g.counters_.push_back(c); break;
      }
    }
  }

  auto require = [&](const std::vector<Cell>& v, const char* what) {
    if (v.empty())
      throw std::invalid_argument(std::string("layout: missing required station: ") + what);
  };
  require(g.pots_, "Pot");
  require(g.onion_dispensers_, "OnionDispenser");
  require(g.dish_dispensers_, "DishDispenser");
  require(g.serving_stations_, "ServingStation");
  return g;
}

const std::string& default_layout_text() {
  static const std::string text =
      "XXXXXXXXX\n"
      "O   P   D\n"
      "X   X   S\n"
      "X       X\n"
      "X   X   S\n"
      "O   P   D\n"
      "XXXXXXXXX\n";
  return text;
}

GridLayout default_layout() { return parse_layout(default_layout_text()); }

}  // namespace tomcat

#include <hiertag/attention_export.hpp>

#include <algorithm>
#include <cstdio>
#include <sstream>

#include <hiertag/errors.hpp>

namespace hiertag {
namespace {

void check_shape(const Matrix& attention, const Hierarchy& h) {
  if (attention.rows() != h.n_fine() || attention.cols() != h.n_coarse()) {
    throw ShapeMismatch("attention must be (n_fine x n_coarse)");
  }
}

std::string fixed6(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  return buf;
}

// Minimal escaping; tag names are expected to be plain words.
std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string attention_to_csv(const Matrix& attention, const Hierarchy& hierarchy) {
  check_shape(attention, hierarchy);
  std::ostringstream out;
  out << "fine_tag";
  for (const std::string& tag : hierarchy.coarse_tags()) out << ',' << tag;
  out << '\n';
  for (int r = 0; r < attention.rows(); ++r) {
    out << hierarchy.fine_tags()[static_cast<std::size_t>(r)];
    for (int c = 0; c < attention.cols(); ++c) out << ',' << fixed6(attention(r, c));
    out << '\n';
  }
  return out.str();
}

std::string attention_to_svg(const Matrix& attention, const Hierarchy& hierarchy) {
  check_shape(attention, hierarchy);
  const int cell = 56;
  const int label_w = 110;
  const int header_h = 42;
  const int width = label_w + cell * attention.cols() + 8;
  const int height = header_h + cell * attention.rows() + 8;

  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\""
      << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "  <rect width=\"" << width << "\" height=\"" << height << "\" fill=\"white\"/>\n";

  for (int c = 0; c < attention.cols(); ++c) {
    const int x = label_w + c * cell + cell / 2;
    out << "  <text x=\"" << x << "\" y=\"" << header_h - 12
        << "\" text-anchor=\"middle\" font-weight=\"bold\">"
        << xml_escape(hierarchy.coarse_tags()[static_cast<std::size_t>(c)]) << "</text>\n";
  }
  for (int r = 0; r < attention.rows(); ++r) {
    const int y = header_h + r * cell;
    out << "  <text x=\"" << label_w - 8 << "\" y=\"" << y + cell / 2 + 4
        << "\" text-anchor=\"end\">"
        << xml_escape(hierarchy.fine_tags()[static_cast<std::size_t>(r)]) << "</text>\n";
    for (int c = 0; c < attention.cols(); ++c) {
      const double v = std::clamp(attention(r, c), 0.0, 1.0);
      // white (255,255,255) -> strong blue (33,102,172)
      const int red = static_cast<int>(255.0 + v * (33.0 - 255.0));
      const int green = static_cast<int>(255.0 + v * (102.0 - 255.0));
      const int blue = static_cast<int>(255.0 + v * (172.0 - 255.0));
      const int x = label_w + c * cell;
      out << "  <rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell << "\" height=\""
          << cell << "\" fill=\"rgb(" << red << ',' << green << ',' << blue
          << ")\" stroke=\"#ccc\" data-value=\"" << fixed6(attention(r, c)) << "\"/>\n";
      char pct[16];
      std::snprintf(pct, sizeof(pct), "%.1f%%", 100.0 * attention(r, c));
      out << "  <text x=\"" << x + cell / 2 << "\" y=\"" << y + cell / 2 + 4
          << "\" text-anchor=\"middle\" fill=\"" << (v > 0.55 ? "white" : "#333") << "\">"
          << pct << "</text>\n";
    }
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace hiertag

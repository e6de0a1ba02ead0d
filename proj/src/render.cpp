#include "mforge/render.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace mforge {

namespace {

std::string num(double v) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.3f", v);
    std::string s(buf);
    if (s == "-0.000") s = "0.000";
    return s;
}

std::string escape(const std::string& text) {
    std::string out;
    for (char c : text) {
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

class Canvas {
public:
    Canvas(const Aabb2& box, const RenderOptions& o) : box_(box), opt_(o) {}

    double x(double wx) const { return (wx - box_.min.x) * opt_.scale; }
    double y(double wy) const { return (box_.max.y - wy) * opt_.scale; }
    double width() const { return (box_.max.x - box_.min.x) * opt_.scale; }
    double height() const { return (box_.max.y - box_.min.y) * opt_.scale; }

    std::string points(const std::vector<Point2>& pts) const {
        std::string s;
        for (std::size_t i = 0; i < pts.size(); ++i) {
            if (i) s += ' ';
            s += num(x(pts[i].x)) + "," + num(y(pts[i].y));
        }
        return s;
    }

    void polygon(const Polygon& p, const std::string& cls, const std::string& extra = "") {
        body_ += "  <polygon class=\"" + cls + "\" points=\"" + points(p.vertices()) + "\"" + extra + "/>\n";
    }
    void polyline(const std::vector<Point2>& pts, const std::string& cls, const std::string& extra = "") {
        body_ += "  <polyline class=\"" + cls + "\" points=\"" + points(pts) + "\"" + extra + "/>\n";
    }
    void circle(const Point2& c, double r, const std::string& cls, const std::string& extra = "") {
        body_ += "  <circle class=\"" + cls + "\" cx=\"" + num(x(c.x)) + "\" cy=\"" + num(y(c.y)) + "\" r=\"" +
                 num(r * opt_.scale) + "\"" + extra + "/>\n";
    }
    void raw(const std::string& s) { body_ += s; }
    const std::string& body() const { return body_; }

private:
    Aabb2 box_;
    RenderOptions opt_;
    std::string body_;
};

void grow(Aabb2& b, const Point2& p) {
    b.min.x = std::min(b.min.x, p.x);
    b.min.y = std::min(b.min.y, p.y);
    b.max.x = std::max(b.max.x, p.x);
    b.max.y = std::max(b.max.y, p.y);
}

std::vector<Point2> path_xy(const TimedPath& path) {
    std::vector<Point2> pts;
    for (const auto& s : path.samples()) pts.push_back(s.pose.position.xy());
    return pts;
}

}  // namespace

std::string render_scene(const MissionDescription& md, const SimulationConfig& cfg, const std::optional<MissionLog>& log,
                         const RenderOptions& options) {
    constexpr double inf = std::numeric_limits<double>::infinity();
    Aabb2 box{{inf, inf}, {-inf, -inf}};
    std::optional<Polygon> band;
    if (md.route) band = route_band(*md.route, 0.05);

    for (const auto& o : cfg.obstacles) for (const auto& p : o.footprint.vertices()) grow(box, p);
    for (const auto& a : md.aois) for (const auto& p : a.polygon.vertices()) grow(box, p);
    for (const auto& k : md.kozs) for (const auto& p : k.polygon.vertices()) grow(box, p);
    if (band) for (const auto& p : band->vertices()) grow(box, p);
    for (const auto& e : cfg.entities) {
        grow(box, e.initial_pose.position.xy());
        if (e.trajectory) for (const auto& p : path_xy(*e.trajectory)) grow(box, p);
    }
    grow(box, cfg.uav_start.position.xy());
    std::vector<Point2> track;
    if (log) {
        for (const auto& ev : log->events) {
            if (const auto* t = std::get_if<TickEvent>(&ev)) track.push_back(t->uav.position.xy());
        }
        for (const auto& p : track) grow(box, p);
    }
    box.min.x -= options.margin;
    box.min.y -= options.margin;
    box.max.x += options.margin;
    box.max.y += options.margin;

    Canvas c(box, options);
    c.raw(" <g id=\"obstacles\">\n");
    for (const auto& o : cfg.obstacles) c.polygon(o.footprint, "obstacle", " data-height=\"" + num(o.height) + "\"");
    c.raw(" </g>\n <g id=\"aois\">\n");
    for (const auto& a : md.aois) c.polygon(a.polygon, "aoi", " data-id=\"" + escape(a.id) + "\"");
    if (md.priors) {
        double top = 0.0;
        for (const auto& cell : md.priors->cells) top = std::max(top, cell.prob);
        for (std::size_t i = 0; i < md.priors->cells.size(); ++i) {
            const auto& cell = md.priors->cells[i];
            const double opacity = top > 0.0 ? 0.1 + 0.6 * cell.prob / top : 0.1;
            c.polygon(cell.polygon, "prior-cell",
                      " data-index=\"" + std::to_string(i) + "\" data-prob=\"" + num(cell.prob) +
                          "\" fill-opacity=\"" + num(opacity) + "\"");
        }
    }
    c.raw(" </g>\n <g id=\"route\">\n");
    if (md.route) {
        c.polygon(*band, "route-band");
        c.polyline(md.route->polyline, "route");
    }
    c.raw(" </g>\n <g id=\"kozs\">\n");
    for (const auto& k : md.kozs) {
        std::string extra = " data-id=\"" + escape(k.id) + "\"";
        if (k.window) extra += " data-net=\"" + num(k.window->net) + "\" data-nlt=\"" + num(k.window->nlt) + "\"";
        c.polygon(k.polygon, "koz", extra);
    }
    c.raw(" </g>\n <g id=\"entities\">\n");
    for (const auto& e : cfg.entities) {
        if (e.trajectory) c.polyline(path_xy(*e.trajectory), "trajectory", " data-id=\"" + escape(e.id) + "\"");
    }
    for (const auto& e : cfg.entities) {
        const std::string cls = e.id == md.target.id ? "entity target" : (e.is_confuser ? "entity confuser" : "entity");
        c.circle(e.initial_pose.position.xy(), 2.0, cls, " data-id=\"" + escape(e.id) + "\"");
    }
    c.raw(" </g>\n <g id=\"uav\">\n");
    if (track.size() >= 2) c.polyline(track, "uav-track");
    c.circle(cfg.uav_start.position.xy(), 3.0, "uav-start");
    c.raw(" </g>\n");

    std::string svg = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
    svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + num(c.width()) + "\" height=\"" + num(c.height()) +
           "\" viewBox=\"0 0 " + num(c.width()) + " " + num(c.height()) + "\">\n";
    svg += " <style>\n"
           "  .obstacle{fill:#8d8d8d;stroke:#555;stroke-width:0.5}\n"
           "  .aoi{fill:none;stroke:#2a7de1;stroke-width:2;stroke-dasharray:6 3}\n"
           "  .prior-cell{fill:#2a7de1;stroke:#2a7de1;stroke-width:0.5}\n"
           "  .route-band{fill:#f0c419;fill-opacity:0.25;stroke:#c79a00;stroke-width:1}\n"
           "  .route{fill:none;stroke:#c79a00;stroke-width:2}\n"
           "  .koz{fill:#e03131;fill-opacity:0.3;stroke:#e03131;stroke-width:1.5}\n"
           "  .trajectory{fill:none;stroke:#6741d9;stroke-width:1.5}\n"
           "  .entity{fill:#343a40}\n"
           "  .confuser{fill:#f08c00}\n"
           "  .target{fill:#2f9e44}\n"
           "  .uav-track{fill:none;stroke:#1098ad;stroke-width:1.5}\n"
           "  .uav-start{fill:#1098ad}\n"
           " </style>\n";
    svg += " <rect width=\"100%\" height=\"100%\" fill=\"#ffffff\"/>\n";
    svg += c.body();
    svg += "</svg>\n";
    return svg;
}

}  // namespace mforge

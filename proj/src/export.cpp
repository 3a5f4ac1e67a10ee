#include "chainlens/export.hpp"

#include <json.hpp>

#include <cstdarg>
#include <cstdio>

namespace chainlens {

using nlohmann::json;

namespace {

void appendf(std::string& out, const char* fmt, ...) {
    char buf[128];
    va_list args;
    va_start(args, fmt);
    int n = vsnprintf(buf, sizeof(buf), fmt, args);
    va_end(args);
    out.append(buf, size_t(n));
}

} // namespace

std::string flow_csv(std::span<const FlowCell> cells) {
    std::string out = "src_height,dst_height,fraction\n";
    for (const FlowCell& c : cells)
        appendf(out, "%u,%u,%.9f\n", c.src_height, c.dst_height, c.fraction);
    return out;
}

std::string dwell_csv(std::span<const DwellPoint> points) {
    std::string out = "height,dwell_blocks,included_satoshis\n";
    for (const DwellPoint& p : points)
        appendf(out, "%u,%.3f,%llu\n", p.height, p.dwell,
                (unsigned long long)p.included_satoshis);
    return out;
}

std::string extranonce_csv(std::span<const ExtranonceSample> samples) {
    std::string out = "height,extranonce,spend_height\n";
    for (const ExtranonceSample& s : samples) {
        appendf(out, "%u,", s.height);
        if (s.extranonce) appendf(out, "%u", *s.extranonce);
        out += ",";
        if (s.spend_height) appendf(out, "%u", *s.spend_height);
        out += "\n";
    }
    return out;
}

std::string degrees_csv(std::span<const DegreeBin> bins) {
    std::string out = "height,signed_degree,count\n";
    for (const DegreeBin& b : bins)
        appendf(out, "%u,%d,%u\n", b.height, b.signed_degree, b.count);
    return out;
}

std::string episodes_csv(std::span<const SpamEpisode> episodes) {
    std::string out =
        "direction,signature_degree,start_height,end_height,tx_count\n";
    for (const SpamEpisode& e : episodes)
        appendf(out, "%s,%u,%u,%u,%llu\n", direction_name(e.direction),
                e.signature_degree, e.start_height, e.end_height,
                (unsigned long long)e.tx_count);
    return out;
}

std::string flow_json(std::span<const FlowCell> cells) {
    json j = json::array();
    for (const FlowCell& c : cells)
        j.push_back({{"src_height", c.src_height},
                     {"dst_height", c.dst_height},
                     {"fraction", c.fraction}});
    return j.dump(1);
}

std::string dwell_json(std::span<const DwellPoint> points) {
    json j = json::array();
    for (const DwellPoint& p : points)
        j.push_back({{"height", p.height},
                     {"dwell_blocks", p.dwell},
                     {"included_satoshis", p.included_satoshis}});
    return j.dump(1);
}

std::string extranonce_json(std::span<const ExtranonceSample> samples) {
    json j = json::array();
    for (const ExtranonceSample& s : samples) {
        json row;
        row["height"] = s.height;
        row["extranonce"] = s.extranonce ? json(*s.extranonce) : json(nullptr);
        row["spend_height"] =
            s.spend_height ? json(*s.spend_height) : json(nullptr);
        j.push_back(row);
    }
    return j.dump(1);
}

std::string degrees_json(std::span<const DegreeBin> bins) {
    json j = json::array();
    for (const DegreeBin& b : bins)
        j.push_back({{"height", b.height},
                     {"signed_degree", b.signed_degree},
                     {"count", b.count}});
    return j.dump(1);
}

std::string episodes_json(std::span<const SpamEpisode> episodes) {
    json j = json::array();
    for (const SpamEpisode& e : episodes)
        j.push_back({{"direction", direction_name(e.direction)},
                     {"signature_degree", e.signature_degree},
                     {"start_height", e.start_height},
                     {"end_height", e.end_height},
                     {"tx_count", e.tx_count}});
    return j.dump(1);
}

std::string stats_json(const GraphStats& s) {
    json j = {{"Blocks", s.blocks},         {"Transactions", s.transactions},
              {"Inputs", s.inputs},         {"Outputs", s.outputs},
              {"Addresses", s.addresses},   {"RawBytes", s.raw_bytes}};
    return j.dump(1);
}

std::string matrix_html(std::span<const FlowCell> cells, uint64_t n_blocks) {
    std::string data;
    data.reserve(cells.size() * 24);
    for (const FlowCell& c : cells)
        appendf(data, "[%u,%u,%.9f],", c.src_height, c.dst_height, c.fraction);
    if (!data.empty()) data.pop_back(); // trailing comma

    std::string html;
    html += R"(<!DOCTYPE html>
<html>
<head>
<meta charset="utf-8">
<title>inter-block value flow</title>
<style>
  body { margin: 0; background: #111; color: #ccc; font: 13px monospace; }
  #hud { position: fixed; top: 8px; left: 8px; background: rgba(0,0,0,.6);
         padding: 6px 10px; border-radius: 4px; pointer-events: none; }
  canvas { display: block; cursor: grab; }
</style>
</head>
<body>
<div id="hud">drag to pan, wheel to zoom</div>
<canvas id="c"></canvas>
<script>
)";
    html += "const N = " + std::to_string(n_blocks) + ";\n";
    html += "const cells = [" + data + "];\n";
    html += R"(const canvas = document.getElementById('c');
const hud = document.getElementById('hud');
const ctx = canvas.getContext('2d');
let scale, ox, oy;

function reset() {
  canvas.width = window.innerWidth;
  canvas.height = window.innerHeight;
  scale = Math.min(canvas.width, canvas.height) / (N || 1);
  ox = 0; oy = 0;
  draw();
}

function color(f) {
  // log colour ramp over the fraction
  const t = Math.max(0, Math.min(1, 1 + Math.log10(Math.max(f, 1e-9)) / 9));
  const r = Math.floor(40 + 215 * t);
  const g = Math.floor(30 + 120 * t * t);
  const b = Math.floor(90 - 60 * t);
  return 'rgb(' + r + ',' + g + ',' + b + ')';
}

function draw() {
  ctx.fillStyle = '#111';
  ctx.fillRect(0, 0, canvas.width, canvas.height);
  const px = Math.max(1, scale);
  for (const [src, dst, f] of cells) {
    const x = src * scale + ox;
    const y = dst * scale + oy;
    if (x < -px || y < -px || x > canvas.width || y > canvas.height) continue;
    ctx.fillStyle = color(f);
    ctx.fillRect(x, y, px, px);
  }
  ctx.strokeStyle = '#333';
  ctx.beginPath();
  ctx.moveTo(ox, oy);
  ctx.lineTo(N * scale + ox, N * scale + oy);
  ctx.stroke();
}

let dragging = false, lx = 0, ly = 0;
canvas.addEventListener('mousedown', e => { dragging = true; lx = e.x; ly = e.y; });
window.addEventListener('mouseup', () => dragging = false);
window.addEventListener('mousemove', e => {
  if (dragging) { ox += e.x - lx; oy += e.y - ly; lx = e.x; ly = e.y; draw(); }
  const src = Math.floor((e.x - ox) / scale), dst = Math.floor((e.y - oy) / scale);
  hud.textContent = 'src ' + src + ' -> dst ' + dst;
});
canvas.addEventListener('wheel', e => {
  e.preventDefault();
  const k = e.deltaY < 0 ? 1.2 : 1 / 1.2;
  ox = e.x - (e.x - ox) * k;
  oy = e.y - (e.y - oy) * k;
  scale *= k;
  draw();
}, { passive: false });
window.addEventListener('resize', reset);
reset();
</script>
</body>
</html>
)";
    return html;
}

} // namespace chainlens

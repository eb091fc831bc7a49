import init, { analyze, bundled_family, generate, search_consensus } from "./pkg/omlab_web.js";

const $ = (id) => document.getElementById(id);
const PALETTE = ["#8ecae6", "#ffb4a2", "#b7e4c7", "#ffe66d", "#cdb4db", "#f4a261", "#a8dadc", "#e9c46a"];

function showError(e) {
  $("error").textContent = e ? String(e) : "";
}

function guarded(fn) {
  return () => {
    showError("");
    try {
      fn();
    } catch (e) {
      showError(e);
    }
  };
}

function el(tag, attrs = {}, text) {
  const node = document.createElement(tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function svgEl(tag, attrs) {
  const node = document.createElementNS("http://www.w3.org/2000/svg", tag);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  return node;
}

function drawEvent(nodes, ev, color) {
  const size = 140, r = 52, c = size / 2;
  const pos = new Map(nodes.map((n, i) => {
    const a = (2 * Math.PI * i) / nodes.length - Math.PI / 2;
    return [n, [c + r * Math.cos(a), c + r * Math.sin(a)]];
  }));
  const svg = svgEl("svg", { width: size, height: size, viewBox: `0 0 ${size} ${size}` });
  const defs = svgEl("defs", {});
  const marker = svgEl("marker", { id: "tip", viewBox: "0 0 10 10", refX: 10, refY: 5, markerWidth: 6, markerHeight: 6, orient: "auto" });
  marker.appendChild(svgEl("path", { d: "M0,0 L10,5 L0,10 z", fill: "#555" }));
  defs.appendChild(marker);
  svg.appendChild(defs);
  for (const [s, t] of ev.arcs) {
    const [x1, y1] = pos.get(s), [x2, y2] = pos.get(t);
    const len = Math.hypot(x2 - x1, y2 - y1) || 1;
    const dx = (x2 - x1) / len, dy = (y2 - y1) / len;
    const ox = -dy * 3, oy = dx * 3;
    svg.appendChild(svgEl("line", {
      x1: x1 + dx * 11 + ox, y1: y1 + dy * 11 + oy, x2: x2 - dx * 11 + ox, y2: y2 - dy * 11 + oy,
      stroke: "#555", "stroke-width": 1.2, "marker-end": "url(#tip)",
    }));
  }
  for (const n of nodes) {
    const [x, y] = pos.get(n);
    const isSource = ev.sources.includes(n);
    svg.appendChild(svgEl("circle", { cx: x, cy: y, r: 10, fill: isSource ? color : "#fff", stroke: "#333" }));
    const label = svgEl("text", { x, y: y + 4, "text-anchor": "middle", "font-size": 10 });
    label.textContent = n;
    svg.appendChild(label);
  }
  return svg;
}

function renderAnalysis(report) {
  const verdict = $("verdict");
  verdict.replaceChildren();
  const answer = report.consensus.answer;
  verdict.appendChild(el("p", { class: `answer ${answer}` }, `Consensus: ${answer}`));
  verdict.appendChild(el("pre", {}, report.consensus_text));
  verdict.appendChild(el("p", {}, `Broadcast: ${report.broadcast.answer}. Family is ${report.convex ? "" : "not "}convex.`));

  if (report.broadcast_rounds.length) {
    const table = el("table");
    const head = el("tr");
    const body = el("tr");
    head.appendChild(el("th", {}, "originator"));
    body.appendChild(el("th", {}, "worst-case flooding rounds"));
    for (const row of report.broadcast_rounds) {
      head.appendChild(el("td", {}, row.node));
      body.appendChild(el("td", {}, row.rounds === null ? "unbounded" : row.rounds));
    }
    table.append(head, body);
    verdict.appendChild(table);
  }

  const classOf = new Map();
  report.beta.classes.forEach((cls, i) => cls.forEach((name) => classOf.set(name, i)));
  verdict.appendChild(el("p", {}, `Beta classes (${report.beta.classes.length}): ` +
    report.beta.classes.map((c) => `{${c.join(", ")}}`).join(" ")));

  const events = $("events");
  events.replaceChildren();
  const shown = report.events.slice(0, 48);
  for (const ev of shown) {
    const color = PALETTE[(classOf.get(ev.name) ?? 0) % PALETTE.length];
    const box = el("div", { class: "event" });
    box.appendChild(drawEvent(report.nodes, ev, color));
    box.appendChild(el("div", {}, ev.name));
    events.appendChild(box);
  }
  if (report.events.length > shown.length) {
    events.appendChild(el("p", {}, `... and ${report.events.length - shown.length} more events`));
  }
}

function renderOracle(report) {
  const out = $("oracle");
  out.replaceChildren();
  const table = el("table");
  table.appendChild(el("tr")).append(el("th", {}, "rounds"), el("th", {}, "executions"), el("th", {}, "components"), el("th", {}, "protocol exists"));
  for (const row of report.horizons) {
    const tr = el("tr");
    tr.append(el("td", {}, row.rounds), el("td", {}, row.executions), el("td", {}, row.components), el("td", {}, row.solvable ? "yes" : "no"));
    table.appendChild(tr);
  }
  out.appendChild(table);
  const o = report.outcome;
  if (o.solvable) {
    out.appendChild(el("p", { class: "answer Solvable" }, `Fastest consensus: ${o.rounds} round(s)`));
    const rows = o.decision_table.slice(0, 64).map((r) => `${r.node}: ${r.view} -> ${r.decide}`);
    if (o.decision_table.length > 64) rows.push(`... ${o.decision_table.length - 64} more`);
    out.appendChild(el("pre", {}, rows.join("\n")));
  } else {
    out.appendChild(el("p", { class: "answer Unsolvable" }, `No protocol decides within ${o.unsolvable_up_to} round(s)`));
    out.appendChild(el("p", {}, `Indistinguishability chain (replay check: ${report.chain_verified ? "ok" : "FAILED"}):`));
    out.appendChild(el("pre", {}, report.chain_text.split("  ").join("\n")));
  }
}

async function main() {
  await init();
  const loadExample = guarded(() => {
    $("family").value = bundled_family($("example").value);
    renderAnalysis(JSON.parse(analyze($("family").value)));
    $("oracle").replaceChildren();
  });
  $("load-example").addEventListener("click", loadExample);
  $("generate").addEventListener("click", guarded(() => {
    $("family").value = generate($("shape").value, Number($("size").value), Number($("f").value), $("metric").value);
    renderAnalysis(JSON.parse(analyze($("family").value)));
    $("oracle").replaceChildren();
  }));
  $("analyze").addEventListener("click", guarded(() => renderAnalysis(JSON.parse(analyze($("family").value)))));
  $("search").addEventListener("click", guarded(() => {
    renderOracle(JSON.parse(search_consensus($("family").value, Number($("horizon").value))));
  }));
  loadExample();
}

main().catch(showError);

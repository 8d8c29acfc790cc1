// DOM rendering for response payloads. Values are shown exactly as the
// gateway sent them; the only arithmetic here is chart geometry.

import { AttachmentDoc, ChartDoc, PayloadDoc, TableDoc } from "./api.js";
import { ChatMessage } from "./model.js";

const SVG_NS = "http://www.w3.org/2000/svg";
const CHART_W = 420;
const CHART_H = 220;
const PAD = 28;

export function renderPayload(doc: Document, payload: PayloadDoc): HTMLElement {
  switch (payload.modality) {
    case "text":
      return renderText(doc, payload.text ?? "");
    case "table":
      return renderTable(doc, payload.table!);
    case "chart":
      return renderChart(doc, payload.chart!);
    case "file":
      return renderAttachment(doc, payload.attachment!);
    case "composite": {
      const wrap = doc.createElement("div");
      wrap.className = "payload-composite";
      for (const part of payload.parts ?? []) {
        wrap.appendChild(renderPayload(doc, part));
      }
      return wrap;
    }
  }
}

function renderText(doc: Document, text: string): HTMLElement {
  const el = doc.createElement("div");
  el.className = "payload-text";
  text.split("\n").forEach((line, i) => {
    if (i > 0) el.appendChild(doc.createElement("br"));
    el.appendChild(doc.createTextNode(line));
  });
  return el;
}

function renderTable(doc: Document, table: TableDoc): HTMLElement {
  const wrap = doc.createElement("div");
  wrap.className = "payload-table";
  const el = doc.createElement("table");
  const head = doc.createElement("tr");
  for (const [name] of table.columns) {
    const th = doc.createElement("th");
    th.textContent = name;
    head.appendChild(th);
  }
  el.appendChild(head);
  for (const row of table.rows) {
    const tr = doc.createElement("tr");
    for (const cell of row) {
      const td = doc.createElement("td");
      td.textContent = String(cell);
      tr.appendChild(td);
    }
    el.appendChild(tr);
  }
  wrap.appendChild(el);
  const caption = doc.createElement("div");
  caption.className = "table-caption";
  caption.textContent = `${table.rows.length} records`;
  wrap.appendChild(caption);
  return wrap;
}

function renderAttachment(doc: Document, attachment: AttachmentDoc): HTMLElement {
  const link = doc.createElement("a");
  link.className = "payload-file";
  // data: URL keeps the exact server bytes; no client-side re-encoding.
  link.href = `data:${attachment.mediaType};base64,${attachment["@bytes"]}`;
  link.download = attachment.filename;
  link.textContent = `Download ${attachment.filename}`;
  return link;
}

function renderChart(doc: Document, chart: ChartDoc): HTMLElement {
  const wrap = doc.createElement("figure");
  wrap.className = `payload-chart chart-${chart.kind}`;
  const title = doc.createElement("figcaption");
  title.textContent = chart.title;
  wrap.appendChild(title);
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${CHART_W} ${CHART_H}`);
  svg.setAttribute("width", String(CHART_W));
  svg.setAttribute("height", String(CHART_H));
  if (chart.values.length > 0) {
    if (chart.kind === "pie") {
      drawPie(doc, svg, chart);
    } else if (chart.kind === "line") {
      drawLine(doc, svg, chart);
    } else {
      drawBars(doc, svg, chart);
    }
  }
  wrap.appendChild(svg as unknown as Node);
  return wrap;
}

function drawBars(doc: Document, svg: Element, chart: ChartDoc): void {
  const max = Math.max(...chart.values, 1);
  const innerW = CHART_W - PAD * 2;
  const innerH = CHART_H - PAD * 2;
  const step = innerW / chart.values.length;
  chart.values.forEach((value, i) => {
    const h = (value / max) * innerH;
    const rect = doc.createElementNS(SVG_NS, "rect");
    rect.setAttribute("x", String(PAD + i * step + step * 0.1));
    rect.setAttribute("y", String(PAD + innerH - h));
    rect.setAttribute("width", String(step * 0.8));
    rect.setAttribute("height", String(h));
    rect.setAttribute("class", "bar");
    const label = doc.createElementNS(SVG_NS, "title");
    label.textContent = `${chart.categories[i]}: ${value}`;
    rect.appendChild(label);
    svg.appendChild(rect);
  });
}

function drawLine(doc: Document, svg: Element, chart: ChartDoc): void {
  const max = Math.max(...chart.values, 1);
  const innerW = CHART_W - PAD * 2;
  const innerH = CHART_H - PAD * 2;
  const step = chart.values.length > 1 ? innerW / (chart.values.length - 1) : 0;
  const points = chart.values
    .map((value, i) => `${PAD + i * step},${PAD + innerH - (value / max) * innerH}`)
    .join(" ");
  const line = doc.createElementNS(SVG_NS, "polyline");
  line.setAttribute("points", points);
  line.setAttribute("class", "line");
  line.setAttribute("fill", "none");
  svg.appendChild(line);
}

function drawPie(doc: Document, svg: Element, chart: ChartDoc): void {
  const total = chart.values.reduce((a, b) => a + b, 0) || 1;
  const cx = CHART_W / 2;
  const cy = CHART_H / 2;
  const r = Math.min(CHART_W, CHART_H) / 2 - PAD / 2;
  let angle = -Math.PI / 2;
  chart.values.forEach((value, i) => {
    const span = (value / total) * Math.PI * 2;
    const x1 = cx + r * Math.cos(angle);
    const y1 = cy + r * Math.sin(angle);
    angle += span;
    const x2 = cx + r * Math.cos(angle);
    const y2 = cy + r * Math.sin(angle);
    const large = span > Math.PI ? 1 : 0;
    const path = doc.createElementNS(SVG_NS, "path");
    path.setAttribute(
      "d",
      `M ${cx} ${cy} L ${x1} ${y1} A ${r} ${r} 0 ${large} 1 ${x2} ${y2} Z`,
    );
    path.setAttribute("class", `slice slice-${i % 8}`);
    const label = doc.createElementNS(SVG_NS, "title");
    label.textContent = `${chart.categories[i]}: ${value}`;
    path.appendChild(label);
    svg.appendChild(path);
  });
}

export function renderMessage(doc: Document, message: ChatMessage): HTMLElement {
  const bubble = doc.createElement("div");
  const classes = ["bubble"];
  if (message.sender.kind === "user") classes.push("from-user");
  if (message.sender.kind === "agent") classes.push("from-agent");
  if (message.sender.kind === "system") classes.push("from-system");
  if (message.fallback) classes.push("fallback");
  if (message.failed) classes.push("failed");
  if (message.notification) classes.push("notification");
  bubble.className = classes.join(" ");

  if (message.sender.kind === "agent") {
    const badge = doc.createElement("span");
    badge.className = "badge";
    badge.textContent = message.sender.agentId;
    bubble.appendChild(badge);
  }
  if (message.payload) {
    bubble.appendChild(renderPayload(doc, message.payload));
  } else if (message.text !== undefined) {
    bubble.appendChild(renderText(doc, message.text));
  }
  return bubble;
}

import init, { relative_curve, band_lines, analyze_signal } from "./pkg/breathing_web.js";

const num = (id) => parseFloat(document.getElementById(id).value);
const params = () => ({
  g: num("g"),
  pre: num("omega-pre"),
  post: num("omega-post"),
  quanta: Math.round(num("quanta")),
  periods: num("periods"),
});

function plot(canvas, xs, ys, { logx = false, xlim = null } = {}) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const fx = logx ? Math.log10 : (v) => v;
  let pts = xs.map((x, i) => [fx(x), ys[i]]);
  if (xlim) pts = pts.filter(([x]) => x >= xlim[0] && x <= xlim[1]);
  if (pts.length < 2) return;
  const [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  const [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#333";
  ctx.fillText(y1.toPrecision(4), 2, pad + 4);
  ctx.fillText(y0.toPrecision(4), 2, h - pad);
  ctx.fillText((logx ? "1e" : "") + x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText((logx ? "1e" : "") + x1.toPrecision(3), w - pad - 30, h - pad + 14);
  ctx.strokeStyle = "#1f5fbf";
  ctx.beginPath();
  pts.forEach(([x, y], i) => (i ? ctx.lineTo(sx(x), sy(y)) : ctx.moveTo(sx(x), sy(y))));
  ctx.stroke();
}

function guard(f) {
  return () => {
    try {
      f();
    } catch (e) {
      alert(e.message ?? e);
    }
  };
}

await init();

document.getElementById("run-curve").onclick = guard(() => {
  const p = params();
  const g = Array.from({ length: 241 }, (_, k) => Math.pow(10, -2 + k / 40));
  plot(document.getElementById("curve"), g, relative_curve(Float64Array.from(g), p.pre, p.post), { logx: true });
});

document.getElementById("run-bands").onclick = guard(() => {
  const p = params();
  const b = band_lines(p.g, p.pre, p.post, p.quanta);
  const rows = ["frequency  kind      upper lower"];
  for (let i = 0; i < b.length; i += 4) {
    rows.push(`${b[i].toFixed(5)}    ${b[i + 1] ? "cm      " : "relative"}  ${b[i + 2]}     ${b[i + 3]}`);
  }
  document.getElementById("bands").textContent = rows.join("\n");
});

document.getElementById("run-signal").onclick = guard(() => {
  const p = params();
  const s = analyze_signal(p.g, p.pre, p.post, p.periods, p.quanta);
  plot(document.getElementById("signal"), s.t, s.x2);
  plot(document.getElementById("spectrum"), s.omega, s.magnitude, { xlim: [1.5, 2.6] });
  const pk = s.peaks;
  const rows = ["centre     amplitude   sigma"];
  for (let i = 0; i < pk.length; i += 3) {
    rows.push(`${pk[i].toFixed(5)}    ${pk[i + 1].toExponential(3)}   ${pk[i + 2].toExponential(2)}`);
  }
  document.getElementById("peaks").textContent = rows.join("\n");
  const f = (v) => (v === undefined ? "none" : v.toFixed(4));
  document.getElementById("lines").textContent = ` CM ${f(s.cm)}, relative ${f(s.relative)}`;
  s.free();
});

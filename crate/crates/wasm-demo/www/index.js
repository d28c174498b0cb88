// Built with `wasm-pack build --target web --out-dir www/pkg`.
import init, { stability_region, classify, decay_trajectory } from "./pkg/onestep_wasm.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function betas() {
  const order = num("order");
  const all = [num("b1"), num("b2"), num("b3")];
  return { order, betas: Float64Array.from(all.slice(0, order)) };
}

function drawRegion() {
  const { order, betas: b } = betas();
  const n = Math.max(2, Math.min(800, num("n")));
  const mask = stability_region(order, b, num("reLo"), num("reHi"), num("imLo"), num("imHi"), n);
  const canvas = $("region");
  canvas.width = n;
  canvas.height = n;
  canvas.style.width = canvas.style.height = "300px";
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(n, n);
  for (let k = 0; k < mask.length; k++) {
    const v = mask[k] ? 70 : 245;
    img.data.set([v, v, mask[k] ? 140 : 245, 255], 4 * k);
  }
  ctx.putImageData(img, 0, 0);
  // Imaginary axis.
  const x0 = ((0 - num("reLo")) / (num("reHi") - num("reLo"))) * n;
  if (x0 >= 0 && x0 <= n) {
    ctx.strokeStyle = "#d33";
    ctx.beginPath();
    ctx.moveTo(x0, 0);
    ctx.lineTo(x0, n);
    ctx.stroke();
  }
}

function showClass() {
  const { order, betas: b } = betas();
  $("class").textContent = JSON.stringify(JSON.parse(classify(order, b)), null, 2);
}

function drawDecay() {
  const steps = Math.max(1, Math.min(200, num("steps")));
  const u = decay_trajectory(num("lambda"), num("dt"), steps, num("b1"), num("b2"));
  const canvas = $("decay");
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(1, ...u.map(Math.abs));
  const y = (v) => h / 2 - (v / top) * (h / 2 - 4);
  ctx.strokeStyle = "#aaa";
  ctx.beginPath();
  ctx.moveTo(0, h / 2);
  ctx.lineTo(w, h / 2);
  ctx.stroke();
  ctx.strokeStyle = "#236";
  ctx.beginPath();
  u.forEach((v, k) => {
    const x = (k / steps) * (w - 4) + 2;
    k === 0 ? ctx.moveTo(x, y(v)) : ctx.lineTo(x, y(v));
  });
  ctx.stroke();
  const ratio = u[0] !== 0 ? u[1] / u[0] : NaN;
  $("decayText").textContent = `first-step ratio ${ratio.toExponential(4)}\nu(T) = ${u[u.length - 1].toExponential(4)}`;
}

function refresh() {
  $("error").textContent = "";
  $("b3").disabled = num("order") !== 3;
  for (const f of [showClass, drawRegion, drawDecay]) {
    try {
      f();
    } catch (e) {
      $("error").textContent = String(e.message ?? e);
    }
  }
}

await init();
$("params").addEventListener("change", refresh);
refresh();

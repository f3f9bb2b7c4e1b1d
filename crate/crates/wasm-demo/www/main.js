import init, { gainCurves, delaySchedule, estimateTrial } from "./pkg/thz_wasm_demo.js";

const $ = (id) => document.getElementById(id);

function plotGain() {
  const profile = $("g-profile").value;
  const design = parseFloat($("g-design").value);
  $("g-design-v").textContent = design.toFixed(2);
  const rows = gainCurves(profile, design, 401);
  const c = $("g-plot");
  const ctx = c.getContext("2d");
  ctx.clearRect(0, 0, c.width, c.height);
  const x = (s) => ((s + 1) / 2) * (c.width - 20) + 10;
  const y = (g) => c.height - 10 - g * (c.height - 20);
  ctx.strokeStyle = "#ddd";
  ctx.beginPath();
  ctx.moveTo(x(design), 0);
  ctx.lineTo(x(design), c.height);
  ctx.stroke();
  for (const [col, color] of [[1, "#1565c0"], [2, "#c62828"]]) {
    ctx.strokeStyle = color;
    ctx.beginPath();
    for (let i = 0; i < rows.length; i += 3) {
      const px = x(rows[i]), py = y(rows[i + col]);
      i === 0 ? ctx.moveTo(px, py) : ctx.lineTo(px, py);
    }
    ctx.stroke();
  }
}

function showDelays() {
  const sine = parseFloat($("d-sine").value);
  $("d-sine-v").textContent = sine.toFixed(2);
  const d = delaySchedule($("g-profile").value, sine);
  $("d-out").textContent = Array.from(d, (t, i) => `element ${i}: ${t.toFixed(3)} ps`).join("\n");
}

function runTrial() {
  $("e-out").textContent = "running...";
  setTimeout(() => {
    try {
      const csv = estimateTrial(parseFloat($("e-snr").value), parseInt($("e-seed").value, 10) >>> 0, $("e-bound").checked);
      const rows = csv.trim().split("\n").slice(1).map((l) => l.split(","));
      $("e-out").textContent = rows
        .filter((r) => r[3] === "nmse")
        .map((r) => `${r[1].padEnd(20)} NMSE ${(10 * Math.log10(parseFloat(r[4]))).toFixed(2)} dB`)
        .join("\n");
    } catch (e) {
      $("e-out").textContent = "";
      $("err").textContent = String(e);
    }
  }, 0);
}

function guarded(f) {
  return () => {
    try {
      $("err").textContent = "";
      f();
    } catch (e) {
      $("err").textContent = String(e);
    }
  };
}

await init();
$("g-profile").addEventListener("change", guarded(() => { plotGain(); showDelays(); }));
$("g-design").addEventListener("input", guarded(plotGain));
$("d-sine").addEventListener("input", guarded(showDelays));
$("e-run").addEventListener("click", runTrial);
guarded(plotGain)();
guarded(showDelays)();

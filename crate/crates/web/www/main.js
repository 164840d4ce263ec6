import init, { bloch_entropy, noise_diamond_distance, approximation_summary } from "./pkg/channel_forge_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => parseFloat($(id).value);

function show(id, f) {
  try {
    $(id).textContent = f();
  } catch (e) {
    $(id).textContent = `error: ${e}`;
  }
}

function refresh() {
  const [x, y, z] = [num("bx"), num("by"), num("bz")];
  const kind = $("noise").value;
  const p = num("strength");
  $("strength-value").textContent = p.toFixed(2);
  show("entropy", () => bloch_entropy(x, y, z).toFixed(6));
  show("diamond", () => noise_diamond_distance(kind, p, 16, 0n).toFixed(6));
  show("approx", () => {
    const s = JSON.parse(approximation_summary(kind, p, parseInt($("dim-a").value), x, y, z));
    return [
      `dim_A = ${s.dim_A}, dim_B = ${s.dim_B}, m = ${s.m}`,
      `unitaries in the mixture: ${s.ru_terms}`,
      `simulation residual: ${s.residual.toExponential(2)}`,
    ].join("\n");
  });
}

await init();
$("status").textContent = "";
for (const id of ["bx", "by", "bz", "noise", "strength", "dim-a"]) {
  $(id).addEventListener("input", refresh);
}
refresh();

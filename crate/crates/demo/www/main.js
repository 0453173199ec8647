import init, { sample_dgp, fit_rule, refined_box, epsilon_rule } from "./pkg/prescience_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function table(head, rows) {
  const t = document.createElement("table");
  t.innerHTML = "<tr>" + head.map((h) => `<th>${h}</th>`).join("") + "</tr>";
  for (const r of rows) {
    const tr = t.insertRow();
    if (r.selected) tr.className = "selected";
    for (const c of r.cells) tr.insertCell().textContent = c;
  }
  return t;
}

function fail(out, e) {
  out.innerHTML = "";
  const p = document.createElement("p");
  p.className = "error";
  p.textContent = String(e);
  out.append(p);
}

// Solves block the page; yield once so the status line is painted first.
function busy(out, work) {
  out.textContent = "working...";
  setTimeout(() => {
    try {
      work();
    } catch (e) {
      fail(out, e);
    }
  }, 20);
}

function showEps() {
  const rows = $("csv").value.trim().split("\n").length - 1;
  const cols = $("csv").value.split("\n")[0].split(",").length - 2;
  if (rows > 0 && cols > 0) {
    $("eps").textContent = `tolerance rule for n = ${rows}, p = ${cols}: ${epsilon_rule(rows, cols).toFixed(4)}`;
  }
}

function sample() {
  try {
    $("csv").value = sample_dgp(num("variant"), num("p"), num("n"), num("seed"));
    showEps();
  } catch (e) {
    fail($("fit-out"), e);
  }
}

function fit() {
  const out = $("fit-out");
  busy(out, () => {
    const r = JSON.parse(fit_rule($("csv").value, num("q"), num("bound"), $("warm").checked));
    out.innerHTML = "";
    const p = document.createElement("p");
    p.textContent = `${r.status}: in-sample score ${r.score.toFixed(4)}, bound ${r.best_bound.toFixed(4)}, ${r.nodes} nodes`;
    out.append(p);
    const rows = [{ cells: ["(leading)", r.alpha > 0 ? "+1" : "-1"] }];
    r.focus_names.forEach((n, j) => rows.push({ cells: [n, r.beta[j].toFixed(4)] }));
    r.aux_names.forEach((n, j) =>
      rows.push({ cells: [n, r.gamma[j].toFixed(4)], selected: r.selected_indices.includes(j) }));
    out.append(table(["coefficient", "value"], rows));
  });
}

function box() {
  const out = $("box-out");
  busy(out, () => {
    const r = JSON.parse(refined_box($("csv").value, num("alpha"), num("tau"), num("bound")));
    out.innerHTML = "";
    const p = document.createElement("p");
    p.textContent = r.feasible
      ? `${r.lp_calls} LPs, volume ratio ${r.volume_ratio.toExponential(3)}`
      : "refinement infeasible; the full box is kept";
    if (r.logit_separated) p.textContent += " (logit fit separated the data)";
    out.append(p);
    out.append(table(["coefficient", "lower", "upper"],
      r.intervals.map((v) => ({ cells: [v.name, v.lower.toFixed(4), v.upper.toFixed(4)] }))));
  });
}

await init();
$("sample").onclick = sample;
$("fit").onclick = fit;
$("box").onclick = box;
$("csv").oninput = showEps;
sample();

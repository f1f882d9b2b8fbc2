import init, { merge, compare, scoreAnswers } from "./pkg/mergebench_demo.js";

const $ = (id) => document.getElementById(id);

function guarded(statusId, fn) {
  return () => {
    $(statusId).textContent = "";
    $(statusId).className = "";
    try {
      fn();
    } catch (e) {
      $(statusId).textContent = e.message ?? String(e);
      $(statusId).className = "error";
    }
  };
}

function runMerge() {
  const view = JSON.parse(merge($("m-base").value, $("m-left").value, $("m-right").value));
  $("m-status").textContent = view.clean ? "clean" : `${view.conflicts} conflict(s)`;
  $("m-out").textContent = view.text;
}

function runCompare() {
  const view = JSON.parse(compare($("n-a").value, $("n-b").value, $("n-lang").value));
  $("n-status").textContent = view.equivalent ? "equivalent" : "different";
  $("n-out-a").textContent = view.left.join("\n");
  $("n-out-b").textContent = view.right.join("\n");
}

function runScore() {
  const answers = $("s-answers").value.split(/\n---\n/);
  const rows = JSON.parse(scoreAnswers($("s-snippet").value, $("s-truth").value, $("s-lang").value, JSON.stringify(answers)));
  const head = "<tr><th>#</th><th>category</th><th>reasoning</th><th>format</th><th>resolution</th><th>total</th><th>advantage</th></tr>";
  const body = rows
    .map((r, i) => `<tr><td>${i + 1}</td><td>${r.category}</td><td>${r.reasoning}</td><td>${r.format}</td>` +
      `<td>${r.resolution}</td><td>${r.total.toFixed(1)}</td><td>${r.advantage.toFixed(3)}</td></tr>`)
    .join("");
  $("s-out").innerHTML = head + body;
}

await init();
$("m-run").onclick = guarded("m-status", runMerge);
$("n-run").onclick = guarded("n-status", runCompare);
$("s-run").onclick = guarded("s-status", runScore);
runMerge();


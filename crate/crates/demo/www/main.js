import init, { analyzeText, rankClaims, aggregateScores } from "./pkg/claimret_demo.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number.parseInt($(id).value, 10) || 0;

function escape(text) {
  const div = document.createElement("div");
  div.textContent = text;
  return div.innerHTML;
}

function show(target, render) {
  try {
    target.innerHTML = render();
  } catch (err) {
    target.innerHTML = `<p class="error">${escape(String(err))}</p>`;
  }
}

function runAnalyzer() {
  show($("an-out"), () => {
    const out = JSON.parse(analyzeText($("an-text").value, $("an-mode").value, num("an-min"), num("an-max"), $("an-lower").checked));
    const chips = out.tokens.map((t) => `<span>${escape(t)}</span>`).join("");
    return `<p class="muted">${out.tokens.length} tokens, ${out.distinct.length} distinct</p><div class="tokens">${chips}</div>`;
  });
}

function runRanking() {
  show($("rk-out"), () => {
    const out = JSON.parse(rankClaims(
      $("rk-claims").value, $("rk-query").value, $("rk-mode").value,
      num("rk-min"), num("rk-max"), $("rk-lower").checked, num("rk-maxf"), num("rk-k"),
    ));
    const rows = out.hits.map((h) =>
      `<tr><td class="num">${h.rank}</td><td class="num">${h.score.toFixed(4)}</td><td class="num">${h.line}</td><td>${escape(h.claim)}</td></tr>`,
    ).join("");
    return `<p class="muted">${out.claims} claims, vocabulary of ${out.vocabulary} terms</p>
      <table><tr><th>#</th><th>cosine</th><th>line</th><th>claim</th></tr>${rows}</table>`;
  });
}

function runAggregate() {
  show($("ag-out"), () => {
    const out = JSON.parse(aggregateScores($("ag-lines").value));
    return `<p>average over ${out.languages} languages: <strong>${out.average.toFixed(4)}</strong></p>`;
  });
}

await init();
for (const id of ["an-text", "an-mode", "an-min", "an-max", "an-lower"]) $(id).addEventListener("input", runAnalyzer);
for (const id of ["rk-claims", "rk-query", "rk-mode", "rk-min", "rk-max", "rk-maxf", "rk-k", "rk-lower"]) $(id).addEventListener("input", runRanking);
$("ag-lines").addEventListener("input", runAggregate);
runAnalyzer();
runRanking();
runAggregate();

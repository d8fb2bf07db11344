import init, { records, deriveAlternative, groupPair, augment } from "./pkg/genderalt_web.js";

const $ = (id) => document.getElementById(id);

function call(fn, ...args) {
  try {
    return { ok: JSON.parse(fn(...args)) };
  } catch (e) {
    return { err: String(e.message || e) };
  }
}

function show(el, result, render) {
  el.classList.toggle("error", "err" in result);
  el.textContent = "err" in result ? result.err : render(result.ok);
}

// Renders the target with each structure shown as "masc / fem",
// coloured by the entity it refers to.
function renderTarget(el, view) {
  el.replaceChildren();
  for (const span of view.target) {
    if (span.kind === "token") {
      el.append(span.text + " ");
    } else {
      const s = document.createElement("span");
      s.className = `structure e${span.entity % 4}`;
      s.textContent = `${span.masculine} / ${span.feminine}`;
      s.title = `refers to "${view.entities[span.entity].head}"`;
      el.append(s, " ");
    }
  }
}

// ---------------------------------------------------------------------------

let corpus = [];
let genders = [];

function selectRecord(id) {
  const view = corpus[id];
  $("source").textContent = view.source;
  renderTarget($("target"), view);
  genders = view.entities.map((e) => (e.label === "A" ? "M" : null));
  const toggles = $("toggles");
  toggles.replaceChildren();
  view.entities.forEach((e, i) => {
    if (e.label !== "A") {
      const fixed = document.createElement("span");
      fixed.className = `fixed`;
      fixed.textContent = `${e.head}: ${e.label} (fixed by the source)`;
      toggles.append(fixed);
      return;
    }
    const group = document.createElement("span");
    group.className = "toggle";
    group.append(`${e.head} `);
    for (const g of ["M", "F"]) {
      const b = document.createElement("button");
      b.textContent = g;
      b.setAttribute("aria-pressed", String(genders[i] === g));
      b.addEventListener("click", () => {
        genders[i] = g;
        for (const other of group.querySelectorAll("button")) {
          other.setAttribute("aria-pressed", String(other === b));
        }
        updateDerived(id);
      });
      group.append(b);
    }
    toggles.append(group);
  });
  updateDerived(id);
}

function updateDerived(id) {
  show($("derived"), call(deriveAlternative, id, JSON.stringify(genders)), (r) => r.text);
}

async function main() {
  await init();
  const loaded = call(records);
  if ("err" in loaded) {
    document.body.prepend(loaded.err);
    return;
  }
  corpus = loaded.ok;
  const select = $("record");
  for (const view of corpus) {
    const opt = document.createElement("option");
    opt.value = view.id;
    opt.textContent = view.source;
    select.append(opt);
  }
  select.addEventListener("change", () => selectRecord(Number(select.value)));
  selectRecord(0);

  $("group-btn").addEventListener("click", () => {
    show($("grouped"), call(groupPair, $("masc").value, $("fem").value), (s) => s);
  });

  $("augment-btn").addEventListener("click", () => {
    const input = JSON.stringify({ source: $("aug-src").value, translation: $("aug-tgt").value });
    show($("augmented"), call(augment, input), (r) =>
      r.outcome === "passthrough"
        ? "No gender-ambiguous person found (or no inflectable words); the pair passes through unchanged."
        : `${r.record.serialized}\n\nstructure → person: ` +
          r.record.target
            .filter((s) => s.kind === "structure")
            .map((s) => `${s.masculine}/${s.feminine} → ${r.record.entities[s.entity].head}`)
            .join(", "),
    );
  });
}

main();

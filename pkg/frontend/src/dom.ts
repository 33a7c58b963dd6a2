/**
 * Thin DOM layer: renders a Scene to SVG and wires the file-open flow.
 *
 * Everything interesting (validation, navigation, layout) lives in the
 * pure modules; this file only translates data to elements.
 */

import {
  Action,
  ArchiveView,
  currentSpecies,
  fitnessTimeline,
  loadArchive,
  navigate,
  resolveGenome,
} from "./archive.js";
import { renderGenome, Scene } from "./render.js";
import { SchemaError } from "./schema.js";

const SVG_NS = "http://www.w3.org/2000/svg";

const NODE_COLORS: Record<string, string> = {
  input: "#7ab3ef",
  bias: "#c9a227",
  hidden: "#9e9e9e",
  output: "#6fbf73",
};

export function sceneToSvg(scene: Scene, doc: Document): SVGSVGElement {
  const svg = doc.createElementNS(SVG_NS, "svg");
  svg.setAttribute("viewBox", `0 0 ${scene.width} ${scene.height}`);
  svg.setAttribute("width", String(scene.width));
  svg.setAttribute("height", String(scene.height));

  for (const edge of scene.edges) {
    const line = doc.createElementNS(SVG_NS, "line");
    line.setAttribute("x1", String(edge.from.x));
    line.setAttribute("y1", String(edge.from.y));
    line.setAttribute("x2", String(edge.to.x));
    line.setAttribute("y2", String(edge.to.y));
    line.setAttribute("stroke-width", edge.width.toFixed(2));
    line.setAttribute("stroke", edge.sign === "positive" ? "#2e7d32" : "#c62828");
    if (edge.dashed) line.setAttribute("stroke-dasharray", "6 4");
    svg.appendChild(line);
  }

  for (const node of scene.nodes) {
    const circle = doc.createElementNS(SVG_NS, "circle");
    circle.setAttribute("cx", String(node.x));
    circle.setAttribute("cy", String(node.y));
    circle.setAttribute("r", "12");
    circle.setAttribute("fill", NODE_COLORS[node.kind] ?? "#9e9e9e");
    svg.appendChild(circle);
    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(node.x));
    text.setAttribute("y", String(node.y + 26));
    text.setAttribute("text-anchor", "middle");
    text.setAttribute("font-size", "10");
    text.textContent = node.label;
    svg.appendChild(text);
  }

  for (const stage of scene.convStages) {
    const cellSize = 18;
    for (const cell of stage.cells) {
      const rect = doc.createElementNS(SVG_NS, "rect");
      rect.setAttribute("x", String(stage.x + cell.col * cellSize));
      rect.setAttribute("y", String(stage.y + cell.row * cellSize));
      rect.setAttribute("width", String(cellSize));
      rect.setAttribute("height", String(cellSize));
      const channel = Math.round(255 - cell.intensity * 200);
      rect.setAttribute(
        "fill",
        cell.value >= 0
          ? `rgb(${channel},${channel},255)`
          : `rgb(255,${channel},${channel})`,
      );
      rect.setAttribute("stroke", "#444");
      svg.appendChild(rect);
    }
    const text = doc.createElementNS(SVG_NS, "text");
    text.setAttribute("x", String(stage.x));
    text.setAttribute("y", String(stage.y + stage.rows * cellSize + 14));
    text.setAttribute("font-size", "10");
    text.textContent = stage.label;
    svg.appendChild(text);
  }
  return svg;
}

interface App {
  view: ArchiveView | null;
}

function redraw(app: App, root: HTMLElement, doc: Document) {
  const canvas = root.querySelector("#canvas")!;
  const status = root.querySelector("#status")!;
  canvas.textContent = "";
  if (!app.view) return;

  const view = app.view;
  const species = currentSpecies(view);
  const timeline = fitnessTimeline(view.archive);
  status.textContent =
    `generation ${view.generation}/${view.archive.generations.length - 1}` +
    ` | species ${species.id} (size ${species.size},` +
    ` stagnation ${species.stagnation})` +
    ` | best ${timeline[view.generation]?.toFixed(4)}`;

  const genome = resolveGenome(view);
  if (genome) canvas.appendChild(sceneToSvg(renderGenome(genome), doc));
}

/** Wire the viewer into a root element; returns a dispatch for tests. */
export function mount(root: HTMLElement, doc: Document = document) {
  const app: App = { view: null };
  root.innerHTML = `
    <div id="toolbar">
      <input type="file" id="file" accept=".json" />
      <button id="prev">prev gen</button>
      <button id="next">next gen</button>
      <select id="species"></select>
      <span id="status"></span>
      <span id="error" role="alert"></span>
    </div>
    <div id="canvas"></div>`;

  const error = root.querySelector("#error")!;
  const speciesSelect = root.querySelector("#species") as HTMLSelectElement;

  const dispatch = (action: Action) => {
    if (!app.view) return;
    app.view = navigate(app.view, action);
    syncSpecies();
    redraw(app, root, doc);
  };

  const syncSpecies = () => {
    speciesSelect.textContent = "";
    if (!app.view) return;
    const gen = app.view.archive.generations[app.view.generation]!;
    for (const s of gen.species) {
      const option = doc.createElement("option");
      option.value = String(s.id);
      option.textContent = `species ${s.id}`;
      option.selected = s.id === app.view.speciesId;
      speciesSelect.appendChild(option);
    }
  };

  root.querySelector("#prev")!.addEventListener("click", () =>
    dispatch({ type: "prev_gen" }),
  );
  root.querySelector("#next")!.addEventListener("click", () =>
    dispatch({ type: "next_gen" }),
  );
  speciesSelect.addEventListener("change", () =>
    dispatch({ type: "select_species", id: Number(speciesSelect.value) }),
  );

  const fileInput = root.querySelector("#file") as HTMLInputElement;
  fileInput.addEventListener("change", async () => {
    const file = fileInput.files?.[0];
    if (!file) return;
    try {
      app.view = loadArchive(JSON.parse(await file.text()));
      error.textContent = "";
    } catch (exc) {
      app.view = null;
      error.textContent =
        exc instanceof SchemaError
          ? `invalid archive: ${exc.message}`
          : `cannot read file: ${exc}`;
    }
    syncSpecies();
    redraw(app, root, doc);
  });

  return {
    dispatch,
    load: (document: unknown) => {
      app.view = loadArchive(document);
      syncSpecies();
      redraw(app, root, doc);
    },
    getView: () => app.view,
  };
}

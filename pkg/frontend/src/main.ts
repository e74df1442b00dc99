/**
 * DOM wiring for the three panes: job list, viewer (window/level, optional
 * side-by-side compare, drag-to-label), and the review form. All data flows
 * through GatewayClient; all pixel math lives in render.ts.
 */

import { ApiError, GatewayClient, type ImagePayload, type JobRecord } from "./api.js";
import { autoWindow, pixelsToRgba, type WindowLevel } from "./render.js";
import {
  applySubmitFailure,
  applySubmitSuccess,
  initialState,
  prepareSubmission,
  type ReviewPanelState,
} from "./state.js";

const baseUrl = new URLSearchParams(location.search).get("gateway") ?? "http://127.0.0.1:8470";
const actor = new URLSearchParams(location.search).get("actor") ?? "dr-1";
const client = new GatewayClient(baseUrl, actor);

const jobsPane = document.getElementById("jobs") as HTMLUListElement;
const viewerCanvas = document.getElementById("viewer") as HTMLCanvasElement;
const compareCanvas = document.getElementById("compare") as HTMLCanvasElement;
const compareSelect = document.getElementById("compare-select") as HTMLSelectElement;
const centerSlider = document.getElementById("wl-center") as HTMLInputElement;
const widthSlider = document.getElementById("wl-width") as HTMLInputElement;
const noticeBox = document.getElementById("notice") as HTMLDivElement;
const scoreInputs = () =>
  Array.from(document.querySelectorAll<HTMLInputElement>("input[name=score]"));
const reportArea = document.getElementById("report") as HTMLTextAreaElement;
const labelList = document.getElementById("labels") as HTMLUListElement;
const submitButton = document.getElementById("submit-review") as HTMLButtonElement;

let panel: ReviewPanelState = initialState();
let currentImage: ImagePayload | null = null;
let compareImage: ImagePayload | null = null;
let wl: WindowLevel = { center: 0.5, width: 1 };
const imageCache = new Map<string, ImagePayload>();

function setNotice(text: string | null, isError = false) {
  noticeBox.textContent = text ?? "";
  noticeBox.className = isError ? "notice error" : "notice";
}

function paint(canvas: HTMLCanvasElement, image: ImagePayload | null) {
  const context = canvas.getContext("2d");
  if (!context) return;
  if (!image) {
    context.clearRect(0, 0, canvas.width, canvas.height);
    return;
  }
  canvas.width = image.width;
  canvas.height = image.height;
  const data = new ImageData(pixelsToRgba(image, wl), image.width, image.height);
  context.putImageData(data, 0, 0);
  if (canvas === viewerCanvas) {
    context.strokeStyle = "#ff5050";
    context.lineWidth = 1;
    for (const label of panel.draft.labels) {
      context.strokeRect(label.x + 0.5, label.y + 0.5, label.w, label.h);
    }
  }
}

function repaint() {
  paint(viewerCanvas, currentImage);
  paint(compareCanvas, compareImage); // same wl: compare is locked to the viewer
}

async function fetchImage(imageId: string): Promise<ImagePayload> {
  const cached = imageCache.get(imageId);
  if (cached) return cached;
  const payload = await client.getImage(imageId);
  imageCache.set(imageId, payload);
  return payload;
}

async function selectJob(job: JobRecord) {
  if (!job.image_id) {
    setNotice(`job ${job.job_id} has no image (state ${job.state})`, true);
    return;
  }
  try {
    currentImage = await fetchImage(job.image_id);
  } catch (error) {
    setNotice(error instanceof ApiError ? error.message : String(error), true);
    return;
  }
  panel = { ...panel, draft: { ...panel.draft, imageId: job.image_id, labels: [] } };
  wl = autoWindow(currentImage.pixels);
  centerSlider.value = String(wl.center);
  widthSlider.value = String(wl.width);
  setNotice(`viewing ${job.job_id} (${job.params["algorithm"]})`);
  repaint();
}

async function refreshJobs() {
  let jobs: JobRecord[] = [];
  try {
    jobs = await client.listJobs();
  } catch (error) {
    setNotice(error instanceof ApiError ? error.message : String(error), true);
    return;
  }
  jobsPane.replaceChildren();
  compareSelect.replaceChildren(new Option("no comparison", ""));
  for (const job of jobs) {
    const item = document.createElement("li");
    const nrmse = job.metrics?.nrmse;
    item.textContent = `${job.job_id} [${job.state}] ${job.params["algorithm"] ?? ""}` +
      (nrmse != null ? ` nrmse=${nrmse.toFixed(4)}` : "");
    if (job.state === "DONE") {
      item.classList.add("done");
      item.addEventListener("click", () => void selectJob(job));
      if (job.image_id) {
        compareSelect.add(new Option(job.job_id, job.image_id));
      }
    }
    jobsPane.appendChild(item);
  }
}

compareSelect.addEventListener("change", async () => {
  compareImage = compareSelect.value ? await fetchImage(compareSelect.value) : null;
  repaint();
});

for (const slider of [centerSlider, widthSlider]) {
  slider.addEventListener("input", () => {
    wl = {
      center: parseFloat(centerSlider.value),
      width: Math.max(parseFloat(widthSlider.value), 1e-6),
    };
    repaint();
  });
}

// drag on the viewer to draw a label rectangle
let dragStart: { x: number; y: number } | null = null;

function canvasPoint(event: MouseEvent): { x: number; y: number } {
  const rect = viewerCanvas.getBoundingClientRect();
  const scaleX = viewerCanvas.width / rect.width;
  const scaleY = viewerCanvas.height / rect.height;
  return {
    x: Math.floor((event.clientX - rect.left) * scaleX),
    y: Math.floor((event.clientY - rect.top) * scaleY),
  };
}

viewerCanvas.addEventListener("mousedown", (event) => {
  dragStart = canvasPoint(event);
});

viewerCanvas.addEventListener("mouseup", (event) => {
  if (!dragStart || !currentImage) return;
  const end = canvasPoint(event);
  const x = Math.max(0, Math.min(dragStart.x, end.x));
  const y = Math.max(0, Math.min(dragStart.y, end.y));
  const w = Math.min(Math.abs(end.x - dragStart.x) + 1, currentImage.width - x);
  const h = Math.min(Math.abs(end.y - dragStart.y) + 1, currentImage.height - y);
  dragStart = null;
  const text = window.prompt("label text", "") ?? "";
  panel.draft.labels.push({ x, y, w, h, text });
  renderLabelList();
  repaint();
});

function renderLabelList() {
  labelList.replaceChildren();
  panel.draft.labels.forEach((label, index) => {
    const item = document.createElement("li");
    item.textContent = `(${label.x},${label.y}) ${label.w}x${label.h} "${label.text}"`;
    const remove = document.createElement("button");
    remove.textContent = "remove";
    remove.addEventListener("click", () => {
      panel.draft.labels.splice(index, 1);
      renderLabelList();
      repaint();
    });
    item.appendChild(remove);
    labelList.appendChild(item);
  });
}

function syncFormFromState() {
  for (const input of scoreInputs()) {
    input.checked = panel.draft.score === Number(input.value);
  }
  reportArea.value = panel.draft.report;
  renderLabelList();
}

for (const input of scoreInputs()) {
  input.addEventListener("change", () => {
    panel.draft.score = Number(input.value);
  });
}
reportArea.addEventListener("input", () => {
  panel.draft.report = reportArea.value;
});

submitButton.addEventListener("click", async () => {
  if (!currentImage) {
    setNotice("select a finished job first", true);
    return;
  }
  const prepared = prepareSubmission(panel.draft, currentImage);
  if (!prepared.ok) {
    setNotice(prepared.problems.join("; "), true); // blocked before any request
    return;
  }
  panel = { ...panel, inFlight: true };
  try {
    const { review_id } = await client.postReview(prepared.body);
    panel = applySubmitSuccess(panel, review_id);
    setNotice(panel.notice);
  } catch (error) {
    if (error instanceof ApiError) {
      panel = applySubmitFailure(panel, error); // draft preserved
      setNotice(panel.notice, true);
    } else {
      panel = { ...panel, inFlight: false };
      setNotice(String(error), true);
    }
  }
  syncFormFromState();
  repaint();
});

void refreshJobs();
window.setInterval(() => void refreshJobs(), 5000);

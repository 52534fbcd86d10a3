import { GLOSSARY } from "../viewmodel.js";

// Modal glossary of shop-floor abbreviations; opens over any screen.
export function renderGlossary(onClose: () => void): HTMLElement {
  const backdrop = document.createElement("div");
  backdrop.className = "glossary-modal";

  const panel = document.createElement("div");
  panel.className = "glossary-panel";

  const heading = document.createElement("h3");
  heading.textContent = "Glossary";
  panel.appendChild(heading);

  const list = document.createElement("dl");
  for (const entry of GLOSSARY) {
    const dt = document.createElement("dt");
    dt.textContent = entry.term;
    const dd = document.createElement("dd");
    dd.textContent = entry.meaning;
    list.appendChild(dt);
    list.appendChild(dd);
  }
  panel.appendChild(list);

  const close = document.createElement("button");
  close.className = "glossary-close";
  close.textContent = "Close";
  close.addEventListener("click", onClose);
  panel.appendChild(close);

  backdrop.appendChild(panel);
  return backdrop;
}

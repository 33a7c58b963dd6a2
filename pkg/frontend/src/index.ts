export * from "./schema.js";
export * from "./archive.js";
export * from "./render.js";
export { mount, sceneToSvg } from "./dom.js";

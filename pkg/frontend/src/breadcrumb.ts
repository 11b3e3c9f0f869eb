/** Drill breadcrumb: the path of tables from the root query to the
 * current drill, labeled by source cluster and forming threshold. Earlier
 * nodes are clickable and navigate from cache; the current node is not. */

import { formatThreshold } from "./format.js";
import type { PathNode } from "./state.js";

export function nodeLabel(node: PathNode): string {
  const threshold = `T > ${formatThreshold(node.threshold)}`;
  return node.clusterId === null ? `all voxels · ${threshold}` : `${node.clusterId} · ${threshold}`;
}

export function renderBreadcrumb(
  container: HTMLElement,
  path: readonly PathNode[],
  onJump: (index: number) => void,
): void {
  container.textContent = "";
  const list = document.createElement("ol");
  list.className = "breadcrumb";
  path.forEach((node, index) => {
    const item = document.createElement("li");
    if (index < path.length - 1) {
      const link = document.createElement("button");
      link.type = "button";
      link.textContent = nodeLabel(node);
      link.addEventListener("click", () => onJump(index));
      item.appendChild(link);
    } else {
      item.textContent = nodeLabel(node);
      item.className = "current";
    }
    list.appendChild(item);
  });
  container.appendChild(list);
}

// Hover-to-zoom: a magnified overlay tracking the cursor over any
// element with a background image source.

export const ZOOM_FACTOR = 2;

export interface ZoomHandle {
  detach(): void;
}

/**
 * Attach a 2x magnifier to a container showing `imageUrl`. The overlay
 * appears on pointer entry, follows the cursor, and is dismissed when
 * the pointer leaves.
 */
export function attachHoverZoom(container: HTMLElement, imageUrl: string): ZoomHandle {
  const overlay = document.createElement("div");
  overlay.className = "zoom-overlay";
  overlay.dataset.zoom = "inactive";
  overlay.style.position = "absolute";
  overlay.style.pointerEvents = "none";
  overlay.style.display = "none";
  overlay.style.backgroundImage = `url(${imageUrl})`;
  overlay.style.backgroundRepeat = "no-repeat";
  container.style.position = "relative";
  container.appendChild(overlay);

  const onMove = (event: MouseEvent) => {
    const rect = container.getBoundingClientRect();
    const width = rect.width || container.clientWidth || 1;
    const height = rect.height || container.clientHeight || 1;
    const x = event.clientX - rect.left;
    const y = event.clientY - rect.top;
    overlay.style.display = "block";
    overlay.dataset.zoom = "active";
    overlay.style.left = "0";
    overlay.style.top = "0";
    overlay.style.width = `${width}px`;
    overlay.style.height = `${height}px`;
    overlay.style.backgroundSize = `${width * ZOOM_FACTOR}px ${height * ZOOM_FACTOR}px`;
    // keep the hovered point fixed while everything around it doubles
    overlay.style.backgroundPosition = `${-x * (ZOOM_FACTOR - 1)}px ${-y * (ZOOM_FACTOR - 1)}px`;
  };

  const onLeave = () => {
    overlay.style.display = "none";
    overlay.dataset.zoom = "inactive";
  };

  container.addEventListener("mouseenter", onMove);
  container.addEventListener("mousemove", onMove);
  container.addEventListener("mouseleave", onLeave);

  return {
    detach() {
      container.removeEventListener("mouseenter", onMove);
      container.removeEventListener("mousemove", onMove);
      container.removeEventListener("mouseleave", onLeave);
      overlay.remove();
    },
  };
}

"""Tiny fixture web sites for gatherer and content-fetch tests."""

from stacks.services.http import start_server


def serve_pages(pages):
    """pages: path -> (content_type, body bytes | str). Returns server."""

    def make_route(content_type, body):
        if isinstance(body, str):
            body = body.encode("utf-8")

        def route(query, request_body, headers):
            return 200, content_type, body

        return route

    routes = {}
    for path, (content_type, body) in pages.items():
        routes[("GET", path)] = make_route(content_type, body)
    return start_server(routes)


def linked_site(n, prefix="/site"):
    """n HTML pages in a chain+fan so BFS discovers them all."""
    pages = {}
    for i in range(n):
        links = "".join(
            '<a href="%s/p%d.html">p%d</a>' % (prefix, j, j)
            for j in (i + 1, i + 2)
            if j < n
        )
        pages["%s/p%d.html" % (prefix, i)] = (
            "text/html",
            "<html><head><title>Page %d</title>"
            '<meta name="description" content="Fixture page %d."></head>'
            "<body><p>Body of page %d about topic%d.</p>%s</body></html>"
            % (i, i, i, i, links),
        )
    return pages
